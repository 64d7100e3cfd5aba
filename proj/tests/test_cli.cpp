#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "sdrnet/image.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
  const char* p = std::getenv("SDRNET_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path work_root() {
  static fs::path root = [] {
    fs::path d = fs::temp_directory_path() / "sdrnet-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return root;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  fs::path out = work_root() / "last-stdout";
  fs::path err = work_root() / "last-stderr";
  std::string cmd = cli_binary() + " " + args + " > " + out.string() + " 2> " +
                    err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Later cases reuse one trained pipeline; building it lazily keeps each
// case runnable in isolation.
struct Pipeline {
  fs::path data = work_root() / "data";
  fs::path run = work_root() / "run";
  fs::path config = work_root() / "run.ini";
};

const Pipeline& pipeline() {
  static Pipeline p = [] {
    Pipeline pl;
    RunResult synth = run_cli(
        "synth --count 6 --size 64 --classes 6 --seed 3 --out " +
        pl.data.string());
    REQUIRE(synth.code == 0);
    std::ofstream cfg(pl.config);
    cfg << "[model]\nnum_classes = 6\ninput_size = 64\nbase_width = 8\n"
        << "[train]\nbatch_size = 2\nmax_iter = 5\nseed = 4\n"
        << "[data]\naugment = none\n";
    cfg.close();
    RunResult train = run_cli("train --config " + pl.config.string() +
                              " --out " + pl.run.string() + " --data " +
                              pl.data.string());
    REQUIRE(train.code == 0);
    return pl;
  }();
  return p;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("dilation analysis prints a report and signals gridding") {
  RunResult good = run_cli("analyze-dilations --rates 1,2,5 --kernel 3");
  CHECK(good.code == 0);
  const char* keys[] = {"rates: 1,2,5", "kernel: 3",        "max_gaps: 1,2,5",
                        "m2: 2",        "passes: true",     "receptive_field: 17"};
  size_t at = 0;
  for (const char* k : keys) {
    size_t pos = good.out.find(k, at);
    CHECK(pos != std::string::npos);
    if (pos != std::string::npos) at = pos;
  }

  RunResult bad = run_cli("analyze-dilations --rates 2,2 --kernel 3");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("passes: false") != std::string::npos);

  RunResult invalid = run_cli("analyze-dilations --rates 0,1");
  CHECK(invalid.code == 1);
  CHECK(invalid.err.find("error") != std::string::npos);

  fs::path png = work_root() / "coverage.png";
  RunResult render = run_cli("analyze-dilations --rates 1,2,5 --render-ascii --render " +
                             png.string());
  CHECK(render.code == 0);
  CHECK(render.out.find('#') != std::string::npos);
  CHECK(fs::exists(png));
}

TEST_CASE("synthetic datasets reproduce bit for bit under one seed") {
  fs::path a = work_root() / "synth-a";
  fs::path b = work_root() / "synth-b";
  fs::path c = work_root() / "synth-c";
  REQUIRE(run_cli("synth --count 2 --size 48 --classes 4 --seed 11 --out " +
                  a.string() + " --color-masks")
              .code == 0);
  REQUIRE(run_cli("synth --count 2 --size 48 --classes 4 --seed 11 --out " +
                  b.string())
              .code == 0);
  REQUIRE(run_cli("synth --count 2 --size 48 --classes 4 --seed 12 --out " +
                  c.string())
              .code == 0);

  std::string name = "synth-0000_r000000_c000000_img.png";
  CHECK(slurp(a / name) == slurp(b / name));
  CHECK(slurp(a / name) != slurp(c / name));
  CHECK(fs::exists(a / "synth-0001_r000000_c000000_mask.png"));
  CHECK(fs::exists(a / "synth-0001_r000000_c000000_color.png"));
  CHECK_FALSE(fs::exists(b / "synth-0001_r000000_c000000_color.png"));
  CHECK(slurp(a / "meta.txt").find("seed=11") != std::string::npos);
}

TEST_CASE("tiling slices an image into sample pairs") {
  fs::path src = work_root() / "tile-src";
  REQUIRE(run_cli("synth --count 1 --size 96 --classes 4 --seed 2 --out " +
                  src.string())
              .code == 0);
  fs::path img = src / "synth-0000_r000000_c000000_img.png";
  fs::path mask = src / "synth-0000_r000000_c000000_mask.png";

  fs::path out = work_root() / "tiles";
  RunResult r = run_cli("tile --image " + img.string() + " --mask " +
                        mask.string() + " --tile 32 --stride 32 --out " +
                        out.string() + " --prefix area9");
  CHECK(r.code == 0);
  int imgs = 0, masks = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    std::string n = e.path().filename().string();
    if (n.find("_img.png") != std::string::npos) ++imgs;
    if (n.find("_mask.png") != std::string::npos) ++masks;
    CHECK(n.rfind("area9", 0) == 0);
  }
  CHECK(imgs == 9);
  CHECK(masks == 9);

  CHECK(run_cli("tile --image " + img.string() + " --mask " + mask.string() +
                " --tile 128 --stride 128 --out " + out.string())
            .code == 1);
}

TEST_CASE("training writes a log, a config echo, and a checkpoint") {
  const Pipeline& pl = pipeline();
  CHECK(fs::exists(pl.run / "model.ckpt"));
  CHECK(fs::exists(pl.run / "config.ini"));

  std::string log = slurp(pl.run / "train_log.csv");
  CHECK(log.find("# seed=4\n") == 0);
  CHECK(log.find("iter,lr,main_loss,inter_loss,total_loss\n") !=
        std::string::npos);
  CHECK(count_lines(log) == 2 + 5);  // header comment, column row, 5 iters

  std::string echo = slurp(pl.run / "config.ini");
  CHECK(echo.find("num_classes = 6") != std::string::npos);
  CHECK(echo.find("max_iter = 5") != std::string::npos);
}

TEST_CASE("evaluation reports per-class scores") {
  const Pipeline& pl = pipeline();
  fs::path report = work_root() / "report.txt";
  fs::path csv = work_root() / "metrics.csv";
  RunResult r = run_cli("eval --checkpoint " + (pl.run / "model.ckpt").string() +
                        " --data " + pl.data.string() + " --out " +
                        report.string() + " --csv " + csv.string());
  CHECK(r.code == 0);
  std::string rep = slurp(report);
  CHECK(rep == r.out);
  for (const char* name : {"Impervious", "Building", "Car", "OA", "mean F1"})
    CHECK(rep.find(name) != std::string::npos);
  CHECK(count_lines(slurp(csv)) == 1 + 6 + 2);
}

TEST_CASE("prediction emits a color map aligned with the input") {
  const Pipeline& pl = pipeline();
  fs::path img = pl.data / "synth-0000_r000000_c000000_img.png";
  fs::path seg1 = work_root() / "seg1.png";
  fs::path seg2 = work_root() / "seg2.png";
  fs::path idx = work_root() / "idx.png";

  RunResult r1 = run_cli("predict --checkpoint " +
                         (pl.run / "model.ckpt").string() + " --image " +
                         img.string() + " --out " + seg1.string() +
                         " --index-out " + idx.string());
  CHECK(r1.code == 0);

  sdrnet::ImageU8 seg = sdrnet::read_png(seg1.string());
  sdrnet::ImageU8 input = sdrnet::read_png(img.string());
  CHECK(seg.height == input.height);
  CHECK(seg.width == input.width);
  CHECK(seg.channels == 3);
  sdrnet::IndexMask mask = sdrnet::read_mask_png(idx.string());
  CHECK(mask.height == input.height);
  for (int32_t v : mask.values) {
    CHECK(v >= 0);
    CHECK(v < 6);
  }

  RunResult r2 = run_cli("predict --checkpoint " +
                         (pl.run / "model.ckpt").string() + " --image " +
                         img.string() + " --out " + seg2.string());
  CHECK(r2.code == 0);
  CHECK(slurp(seg1) == slurp(seg2));
}

TEST_CASE("model summary prints totals in both formats") {
  const Pipeline& pl = pipeline();
  RunResult human = run_cli("model-summary --config " + pl.config.string());
  CHECK(human.code == 0);
  CHECK(human.out.find("total") != std::string::npos);

  RunResult machine =
      run_cli("model-summary --config " + pl.config.string() + " --machine");
  CHECK(machine.code == 0);
  CHECK(machine.out.find("parameter_count=") != std::string::npos);
  CHECK(machine.out.find("flops_estimate=") != std::string::npos);
  CHECK(machine.out.find("stage.enc1.block1.params=") != std::string::npos);
}

TEST_CASE("usage problems exit with code one") {
  CHECK(run_cli("definitely-not-a-subcommand").code == 1);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("tile --tile 32").code == 1);  // missing required options
  CHECK(run_cli("").code == 1);                // a subcommand is required
}

TEST_CASE("missing files exit with code three") {
  fs::path ghost = work_root() / "ghost";
  CHECK(run_cli("eval --checkpoint " + ghost.string() + ".ckpt --data " +
                ghost.string())
            .code == 3);
  CHECK(run_cli("train --config " + ghost.string() + ".ini").code == 3);
  CHECK(run_cli("predict --checkpoint " + ghost.string() +
                ".ckpt --image x.png --out y.png")
            .code == 3);
}

TEST_CASE("config mistakes exit with code one") {
  fs::path bad = work_root() / "bad.ini";
  {
    std::ofstream f(bad);
    f << "[model]\nnum_classes = banana\n";
  }
  CHECK(run_cli("train --config " + bad.string()).code == 1);

  const Pipeline& pl = pipeline();
  // A 6-class checkpoint with an explicit isprs map is fine; forcing the
  // isprs map onto a mismatched model is covered by unit tests. Here:
  // unknown map names fail fast.
  CHECK(run_cli("eval --checkpoint " + (pl.run / "model.ckpt").string() +
                " --data " + pl.data.string() + " --classmap marsface")
            .code == 1);
}
