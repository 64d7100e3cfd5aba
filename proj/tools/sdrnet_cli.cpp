#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdrnet/checkpoint.hpp"
#include "sdrnet/dataset.hpp"
#include "sdrnet/dilation.hpp"
#include "sdrnet/metrics.hpp"
#include "sdrnet/synthetic.hpp"
#include "sdrnet/tiling.hpp"
#include "sdrnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace sdrnet;

namespace {

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
    case ErrorKind::Parse:
      return 1;
    default:
      return 3;
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), ErrorKind::Data, strf("cannot write %s", path.c_str()));
  out << text;
  check(out.good(), ErrorKind::Data, strf("short write to %s", path.c_str()));
}

std::vector<int> parse_rates(const std::string& text) {
  std::vector<int> rates;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      if (!cur.empty()) {
        char* end = nullptr;
        long v = std::strtol(cur.c_str(), &end, 10);
        check(end && *end == '\0', ErrorKind::InvalidArgument,
              strf("bad dilation rate '%s'", cur.c_str()));
        rates.push_back(static_cast<int>(v));
        cur.clear();
      }
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  return rates;
}

ImageU8 coverage_image(const CoverageGrid& g) {
  ImageU8 img = make_image(g.side(), g.side(), 1, 0);
  for (int64_t y = 0; y < g.side(); ++y)
    for (int64_t x = 0; x < g.side(); ++x)
      img.at(y, x, 0) = g.hits[static_cast<size_t>(y * g.side() + x)] ? 255 : 0;
  return img;
}

int run_analyze(const std::string& rates_text, int kernel,
                const std::string& render_path, bool render_ascii_flag) {
  DilationSchedule s{parse_rates(rates_text), kernel};
  GriddingReport rep = check_gridding(s);

  std::string rates_str;
  for (size_t i = 0; i < s.rates.size(); ++i)
    rates_str += strf(i ? ",%d" : "%d", s.rates[i]);
  std::string gaps_str;
  for (size_t i = 0; i < rep.max_gaps.size(); ++i)
    gaps_str += strf(i ? ",%lld" : "%lld",
                     static_cast<long long>(rep.max_gaps[i]));

  std::printf("rates: %s\n", rates_str.c_str());
  std::printf("kernel: %d\n", s.kernel_size);
  std::printf("max_gaps: %s\n", gaps_str.c_str());
  std::printf("m2: %lld\n", static_cast<long long>(rep.m2));
  std::printf("passes: %s\n", rep.passes ? "true" : "false");
  std::printf("receptive_field: %lld\n",
              static_cast<long long>(receptive_field(s)));

  if (!render_path.empty() || render_ascii_flag) {
    CoverageGrid g = footprint(s);
    if (render_ascii_flag) std::fputs(render_ascii(g).c_str(), stdout);
    if (!render_path.empty()) write_png(render_path, coverage_image(g));
  }
  return rep.passes ? 0 : 2;
}

int run_tile(const std::string& image_path, const std::string& mask_path,
             int tile, int stride, const std::string& out_dir,
             std::string prefix) {
  ImageU8 image = read_png(image_path);
  IndexMask mask;
  if (!mask_path.empty()) {
    mask = read_mask_png(mask_path);
  } else {
    mask = make_mask(image.height, image.width, 255);
  }
  if (prefix.empty()) {
    prefix = fs::path(image_path).stem().string();
  }
  TilePlan plan = plan_tiles(image.height, image.width, tile, stride);
  std::vector<Sample> samples = extract(image, mask, plan, prefix);
  write_sample_dir(out_dir, samples);
  std::printf("wrote %d tiles of %dx%d (stride %d) to %s\n",
              static_cast<int>(samples.size()), tile, tile, stride,
              out_dir.c_str());
  return 0;
}

int run_synth(int count, int size, int classes, uint64_t seed,
              const std::string& out_dir, bool color_masks) {
  std::vector<Sample> samples =
      make_synthetic_dataset(count, size, classes, seed);
  ClassMap map = make_synthetic_class_map(classes);
  write_sample_dir(out_dir, samples, color_masks ? &map : nullptr);
  write_text_file((fs::path(out_dir) / "meta.txt").string(),
                  strf("seed=%llu\ncount=%d\nsize=%d\nclasses=%d\n",
                       static_cast<unsigned long long>(seed), count, size,
                       classes));
  std::printf("wrote %d synthetic samples to %s\n", count, out_dir.c_str());
  return 0;
}

AugmentPolicy resolve_policy(const std::string& spec) {
  if (spec == "default") return default_policy();
  if (spec == "none") return identity_policy();
  std::ifstream in(spec);
  check(in.good(), ErrorKind::Data,
        strf("cannot open augment policy: %s", spec.c_str()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_augment_policy(ss.str());
}

int run_train(const std::string& config_path, int64_t max_iter_override,
              int64_t seed_override, const std::string& out_dir,
              const std::string& data_override,
              const std::string& val_override) {
  RunConfig cfg = load_run_config(config_path);
  if (max_iter_override >= 0) cfg.train.max_iter = max_iter_override;
  if (seed_override >= 0) cfg.train.seed = static_cast<uint64_t>(seed_override);
  if (!data_override.empty()) cfg.data.train_dir = data_override;
  if (!val_override.empty()) cfg.data.val_dir = val_override;
  validate_run_config(cfg);
  check(!cfg.data.train_dir.empty(), ErrorKind::Config,
        "no training directory: set [data] train_dir or pass --data");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  check(!ec, ErrorKind::Data, strf("cannot create %s", out_dir.c_str()));

  std::vector<Sample> train_set = load_sample_dir(cfg.data.train_dir);
  std::vector<Sample> val_set;
  if (!cfg.data.val_dir.empty()) val_set = load_sample_dir(cfg.data.val_dir);

  auto model = build_model(cfg.model, cfg.train.seed);
  for (const std::string& w : model->warnings())
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (cfg.model.pretrained_encoder1 || cfg.model.pretrained_encoder2)
    load_pretrained_encoders(*model);

  LossConfig lc = cfg.loss;
  if (cfg.weighting == ClassWeighting::InverseFrequency)
    lc.class_weights = inverse_frequency_weights(
        train_set, cfg.model.num_classes, lc.ignore_index);

  AugmentPolicy policy = resolve_policy(cfg.data.augment);
  std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
  TrainResult result =
      train(*model, train_set, val_set, cfg.train, lc, policy, ckpt);

  write_text_file((fs::path(out_dir) / "train_log.csv").string(),
                  train_log_csv(result.log, cfg.train.seed));
  if (!result.val.empty())
    write_text_file((fs::path(out_dir) / "val_log.csv").string(),
                    val_log_csv(result.val));
  write_text_file((fs::path(out_dir) / "config.ini").string(),
                  run_config_text(cfg));

  std::printf("trained %lld iterations on %d samples\n",
              static_cast<long long>(cfg.train.max_iter),
              static_cast<int>(train_set.size()));
  std::printf("final loss: %.6g\n", result.log.back().total_loss);
  for (const ValRecord& v : result.val)
    std::printf("val iter %lld: oa %.4f mean_f1 %.4f\n",
                static_cast<long long>(v.iter), v.oa, v.mean_f1);
  std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
  return 0;
}

ClassMap pick_class_map(const std::string& choice, int num_classes) {
  if (choice == "isprs") {
    check(num_classes == 6, ErrorKind::Config,
          strf("the isprs class map has 6 classes, model has %d", num_classes));
    return isprs_class_map();
  }
  if (choice == "synthetic") return make_synthetic_class_map(num_classes);
  check(choice == "auto", ErrorKind::InvalidArgument,
        strf("unknown class map '%s' (want auto, isprs, or synthetic)",
             choice.c_str()));
  return num_classes == 6 ? isprs_class_map()
                          : make_synthetic_class_map(num_classes);
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& out_path, const std::string& csv_path,
             const std::string& classmap_choice) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  auto model = make_model(ck);
  ClassMap map = pick_class_map(classmap_choice, ck.config.num_classes);

  std::vector<Sample> samples = load_sample_dir(data_dir);
  ConfusionMatrix conf = make_confusion(map);
  for (const Sample& s : samples) {
    IndexMask pred = argmax_mask(predict_logits(*model, s.image));
    accumulate(conf, pred, s.mask);
  }
  MetricsReport rep = metrics(conf);
  std::string table = report_table(rep);
  std::fputs(table.c_str(), stdout);
  if (!out_path.empty()) write_text_file(out_path, table);
  if (!csv_path.empty()) write_text_file(csv_path, metrics_csv(conf, rep));
  return 0;
}

ImageU8 crop(const ImageU8& src, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  ImageU8 out = make_image(h, w, src.channels, 0);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < src.channels; ++c)
        out.at(y, x, c) = src.at(y0 + y, x0 + x, c);
  return out;
}

int run_predict(const std::string& ckpt_path, const std::string& image_path,
                const std::string& out_path, const std::string& index_out,
                int stride, const std::string& classmap_choice) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  auto model = make_model(ck);
  const int tile = ck.config.input_size;
  if (stride <= 0) stride = tile;
  ClassMap map = pick_class_map(classmap_choice, ck.config.num_classes);

  ImageU8 image = read_png(image_path);
  check(image.channels == ck.config.in_channels, ErrorKind::Data,
        strf("%s has %lld channels, model expects %d", image_path.c_str(),
             static_cast<long long>(image.channels), ck.config.in_channels));
  TilePlan plan = plan_tiles(image.height, image.width, tile, stride);
  std::vector<TilePrediction> preds;
  preds.reserve(plan.windows.size());
  for (const auto& [row, col] : plan.windows) {
    TilePrediction p;
    p.row = row;
    p.col = col;
    p.logits = predict_logits(*model, crop(image, row, col, tile, tile));
    preds.push_back(std::move(p));
  }
  Tensor logits = stitch(preds, plan, ck.config.num_classes);
  IndexMask mask = argmax_mask(logits);
  write_png(out_path, decode_mask(mask, map));
  if (!index_out.empty()) write_mask_png(index_out, mask);
  std::printf("predicted %lldx%lld (%d tiles) -> %s\n",
              static_cast<long long>(image.height),
              static_cast<long long>(image.width),
              static_cast<int>(plan.windows.size()), out_path.c_str());
  return 0;
}

int run_summary(const std::string& config_path, bool machine) {
  ModelConfig mc;
  if (!config_path.empty()) mc = load_run_config(config_path).model;
  auto model = build_model(mc);
  for (const std::string& w : model->warnings())
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  ModelSummary s = summarize(*model);
  std::fputs((machine ? summary_machine(s) : summary_table(s)).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stacked dilated-residual segmentation toolkit"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand(
      "analyze-dilations", "check a dilation schedule for gridding");
  std::string rates = "1,2,5";
  int kernel = 3;
  std::string render_path;
  bool render_ascii_flag = false;
  analyze->add_option("--rates", rates, "comma-separated dilation rates");
  analyze->add_option("--kernel", kernel, "convolution kernel size");
  analyze->add_option("--render", render_path, "write the footprint as a PNG");
  analyze->add_flag("--render-ascii", render_ascii_flag,
                    "print the footprint as text");

  auto* tile_cmd =
      app.add_subcommand("tile", "cut an image/mask pair into training tiles");
  std::string tile_image, tile_mask, tile_out, tile_prefix;
  int tile_size = 256, tile_stride = 256;
  tile_cmd->add_option("--image", tile_image, "input image PNG")->required();
  tile_cmd->add_option("--mask", tile_mask, "index mask PNG");
  tile_cmd->add_option("--tile", tile_size, "tile side length");
  tile_cmd->add_option("--stride", tile_stride, "tile stride");
  tile_cmd->add_option("--out", tile_out, "output directory")->required();
  tile_cmd->add_option("--prefix", tile_prefix, "sample id prefix");

  auto* synth =
      app.add_subcommand("synth", "generate a synthetic labeled dataset");
  int synth_count = 8, synth_size = 64, synth_classes = 6;
  uint64_t synth_seed = 0;
  std::string synth_out;
  bool synth_color = false;
  synth->add_option("--count", synth_count, "number of samples");
  synth->add_option("--size", synth_size, "sample side length");
  synth->add_option("--classes", synth_classes, "number of classes");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_flag("--color-masks", synth_color,
                  "also write color-coded masks");

  auto* train_cmd = app.add_subcommand("train", "train from a run config");
  std::string train_config, train_out = "run", train_data, train_val;
  int64_t train_max_iter = -1, train_seed = -1;
  train_cmd->add_option("--config", train_config, "run config file")
      ->required();
  train_cmd->add_option("--max-iter", train_max_iter,
                        "override [train] max_iter");
  train_cmd->add_option("--seed", train_seed, "override [train] seed");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cmd->add_option("--data", train_data, "override [data] train_dir");
  train_cmd->add_option("--val", train_val, "override [data] val_dir");

  auto* eval_cmd =
      app.add_subcommand("eval", "score a checkpoint on a sample directory");
  std::string eval_ckpt, eval_data, eval_out, eval_csv, eval_map = "auto";
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")
      ->required();
  eval_cmd->add_option("--data", eval_data, "sample directory")->required();
  eval_cmd->add_option("--out", eval_out, "write the report here");
  eval_cmd->add_option("--csv", eval_csv, "write per-class counts as CSV");
  eval_cmd->add_option("--classmap", eval_map,
                       "class names/colors: auto, isprs, or synthetic");

  auto* predict_cmd =
      app.add_subcommand("predict", "segment an image with a checkpoint");
  std::string pred_ckpt, pred_image, pred_out, pred_index, pred_map = "auto";
  int pred_stride = 0;
  predict_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint file")
      ->required();
  predict_cmd->add_option("--image", pred_image, "input image PNG")
      ->required();
  predict_cmd->add_option("--out", pred_out, "color segmentation PNG")
      ->required();
  predict_cmd->add_option("--index-out", pred_index,
                          "also write the raw index mask");
  predict_cmd->add_option("--stride", pred_stride,
                          "tile stride (default: the model input size)");
  predict_cmd->add_option("--classmap", pred_map,
                          "class colors: auto, isprs, or synthetic");

  auto* summary_cmd =
      app.add_subcommand("model-summary", "parameter and flop breakdown");
  std::string summary_config;
  bool summary_machine = false;
  summary_cmd->add_option("--config", summary_config, "run config file");
  summary_cmd->add_flag("--machine", summary_machine,
                        "key=value output for scripts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Collapse CLI11's per-error exit codes: 0 for --help, 1 for usage
    // problems.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (analyze->parsed())
      return run_analyze(rates, kernel, render_path, render_ascii_flag);
    if (tile_cmd->parsed())
      return run_tile(tile_image, tile_mask, tile_size, tile_stride, tile_out,
                      tile_prefix);
    if (synth->parsed())
      return run_synth(synth_count, synth_size, synth_classes, synth_seed,
                       synth_out, synth_color);
    if (train_cmd->parsed())
      return run_train(train_config, train_max_iter, train_seed, train_out,
                       train_data, train_val);
    if (eval_cmd->parsed())
      return run_eval(eval_ckpt, eval_data, eval_out, eval_csv, eval_map);
    if (predict_cmd->parsed())
      return run_predict(pred_ckpt, pred_image, pred_out, pred_index,
                         pred_stride, pred_map);
    if (summary_cmd->parsed())
      return run_summary(summary_config, summary_machine);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", error_kind_name(e.kind()),
                 e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
