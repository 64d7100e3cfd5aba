#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sdrnet/augment.hpp"
#include "sdrnet/rng.hpp"
#include "sdrnet/synthetic.hpp"

using namespace sdrnet;

namespace {

auto kind_is(ErrorKind k) {
  return Catch::Matchers::Predicate<Error>(
      [k](const Error& e) { return e.kind() == k; });
}

Sample random_sample(Rng& rng, int64_t h, int64_t w) {
  Sample s;
  s.image = make_image(h, w, 3, 0);
  for (uint8_t& v : s.image.pixels)
    v = static_cast<uint8_t>(rng.next_u32() & 255);
  s.mask = make_mask(h, w, 0);
  for (int32_t& v : s.mask.values)
    v = static_cast<int32_t>(rng.uniform_int(0, 5));
  s.source_id = "t";
  return s;
}

bool same(const Sample& a, const Sample& b) {
  return a.image.pixels == b.image.pixels && a.mask.values == b.mask.values;
}

}  // namespace

TEST_CASE("flips and transpose are involutions, four quarter turns cycle") {
  Rng rng(401);
  Sample s = random_sample(rng, 13, 21);

  CHECK(hflip(hflip(s.image)).pixels == s.image.pixels);
  CHECK(vflip(vflip(s.image)).pixels == s.image.pixels);
  CHECK(transpose(transpose(s.image)).pixels == s.image.pixels);
  CHECK(hflip(hflip(s.mask)).values == s.mask.values);
  CHECK(vflip(vflip(s.mask)).values == s.mask.values);
  CHECK(transpose(transpose(s.mask)).values == s.mask.values);

  ImageU8 r = rot90cw(rot90cw(rot90cw(rot90cw(s.image))));
  CHECK(r.pixels == s.image.pixels);
}

TEST_CASE("quarter turn moves the top-left corner to the top-right") {
  ImageU8 im = make_image(3, 5, 1, 0);
  im.at(0, 0, 0) = 200;
  im.at(2, 4, 0) = 77;
  ImageU8 r = rot90cw(im);
  REQUIRE(r.height == 5);
  REQUIRE(r.width == 3);
  CHECK(r.at(0, 2, 0) == 200);  // (0,0) -> (0, H-1)
  CHECK(r.at(4, 0, 0) == 77);   // (H-1, W-1) -> (W-1, 0)

  // rot90cw == transpose then hflip, on both carriers.
  Rng rng(402);
  Sample s = random_sample(rng, 9, 14);
  CHECK(rot90cw(s.image).pixels == hflip(transpose(s.image)).pixels);
  CHECK(rot90cw(s.mask).values == hflip(transpose(s.mask)).values);
}

TEST_CASE("an empty policy returns the sample unchanged") {
  Rng rng(403);
  Sample s = random_sample(rng, 16, 16);
  Sample out = augment(s, 999, identity_policy());
  CHECK(same(out, s));
  CHECK(out.source_id == s.source_id);
}

TEST_CASE("augmentation is deterministic in the seed") {
  Rng rng(404);
  Sample s = random_sample(rng, 32, 32);
  AugmentPolicy policy = default_policy();
  Sample a = augment(s, 1234, policy);
  Sample b = augment(s, 1234, policy);
  CHECK(same(a, b));

  // A sweep of seeds must produce at least two distinct outputs.
  bool any_diff = false;
  for (uint64_t seed = 0; seed < 8 && !any_diff; ++seed)
    any_diff = !same(augment(s, seed, policy), a);
  CHECK(any_diff);
}

TEST_CASE("geometric permutations keep image and mask aligned") {
  // Image color encodes the mask class, so alignment survives any
  // permutation op exactly.
  Rng rng(405);
  Sample s;
  s.mask = make_mask(24, 24, 0);
  for (int32_t& v : s.mask.values)
    v = static_cast<int32_t>(rng.uniform_int(0, 5));
  s.image = make_image(24, 24, 3, 0);
  for (int64_t y = 0; y < 24; ++y)
    for (int64_t x = 0; x < 24; ++x)
      s.image.at(y, x, 0) = static_cast<uint8_t>(40 * s.mask.at(y, x));

  AugmentPolicy policy;
  policy.ops = {{AugmentKind::HorizontalFlip, 1.f, 0.f},
                {AugmentKind::Rotate90, 1.f, 0.f},
                {AugmentKind::Transpose, 1.f, 0.f},
                {AugmentKind::VerticalFlip, 1.f, 0.f}};
  for (uint64_t seed = 0; seed < 6; ++seed) {
    Sample out = augment(s, seed, policy);
    bool aligned = true;
    for (int64_t y = 0; y < out.image.height && aligned; ++y)
      for (int64_t x = 0; x < out.image.width && aligned; ++x)
        aligned = out.image.at(y, x, 0) ==
                  static_cast<uint8_t>(40 * out.mask.at(y, x));
    CHECK(aligned);
  }
}

TEST_CASE("shifting exposes border pixels as ignore") {
  Sample s;
  s.image = make_image(16, 16, 3, 200);
  s.mask = make_mask(16, 16, 2);
  shift_scale(s.image, s.mask, 1.0, 0.0, 5.0, 255);
  // The 5 left columns now sample outside the source frame.
  for (int64_t y = 0; y < 16; ++y)
    for (int64_t x = 0; x < 4; ++x) {
      CHECK(s.mask.at(y, x) == 255);
      CHECK(s.image.at(y, x, 0) == 0);
    }
  CHECK(s.mask.at(8, 10) == 2);
  CHECK(s.image.at(8, 10, 0) == 200);
}

TEST_CASE("identity warps change nothing") {
  Rng rng(406);
  Sample s = random_sample(rng, 20, 20);
  Sample t = s;
  shift_scale(t.image, t.mask, 1.0, 0.0, 0.0, 255);
  CHECK(same(t, s));

  Rng grng(407);
  Sample u = s;
  grid_distortion(u.image, u.mask, 4, 0.0, grng, 255);
  CHECK(same(u, s));
}

TEST_CASE("grid distortion keeps the mask label set and size") {
  Rng rng(408);
  Sample s = random_sample(rng, 33, 27);
  Sample out = s;
  Rng grng(409);
  grid_distortion(out.image, out.mask, 4, 0.3, grng, 255);
  REQUIRE(out.image.height == 33);
  REQUIRE(out.image.width == 27);
  // Edges are pinned, so nothing samples outside: no ignore appears.
  for (int32_t v : out.mask.values) CHECK(v != 255);
  CHECK_FALSE(same(out, s));
}

TEST_CASE("photometric ops touch the image only") {
  Rng rng(410);
  Sample s = random_sample(rng, 16, 16);
  AugmentPolicy policy;
  policy.ops = {{AugmentKind::Brightness, 1.f, 0.3f},
                {AugmentKind::Contrast, 1.f, 0.3f},
                {AugmentKind::ColorJitter, 1.f, 0.3f}};
  Sample out = augment(s, 42, policy);
  CHECK(out.mask.values == s.mask.values);
  CHECK(out.image.pixels != s.image.pixels);
}

TEST_CASE("brightness and contrast formulas on known pixels") {
  ImageU8 im = make_image(1, 3, 1, 0);
  im.at(0, 0, 0) = 0;
  im.at(0, 1, 0) = 100;
  im.at(0, 2, 0) = 250;
  ImageU8 b = im;
  adjust_brightness(b, 0.1);  // +25.5, rounded, clamped
  CHECK(b.at(0, 0, 0) == 26);
  CHECK(b.at(0, 1, 0) == 126);
  CHECK(b.at(0, 2, 0) == 255);

  ImageU8 c = im;
  adjust_contrast(c, 1.5);  // (v-128)*1.5+128
  CHECK(c.at(0, 0, 0) == 0);
  CHECK(c.at(0, 1, 0) == 86);
  CHECK(c.at(0, 2, 0) == 255);
}

TEST_CASE("the default policy lists every op once") {
  AugmentPolicy p = default_policy();
  REQUIRE(p.ops.size() == 10);
  std::set<AugmentKind> kinds;
  for (const AugmentOp& op : p.ops) {
    kinds.insert(op.kind);
    CHECK(op.probability == 0.5f);
  }
  CHECK(kinds.size() == 10);
}

TEST_CASE("augment policy text round-trips") {
  AugmentPolicy p = parse_augment_policy(
      "# ops\n"
      "hflip 1.0\n"
      "rotate90 0.25\n"
      "shift_scale 0.5 0.2\n"
      "brightness 0.75 0.05\n");
  REQUIRE(p.ops.size() == 4);
  CHECK(p.ops[0].kind == AugmentKind::HorizontalFlip);
  CHECK(p.ops[0].probability == 1.0f);
  CHECK(p.ops[1].kind == AugmentKind::Rotate90);
  CHECK(p.ops[1].probability == 0.25f);
  CHECK(p.ops[2].kind == AugmentKind::ShiftScale);
  CHECK(p.ops[2].magnitude == 0.2f);
  CHECK(p.ops[3].kind == AugmentKind::Brightness);
  CHECK(p.ops[3].magnitude == 0.05f);

  CHECK_THROWS_MATCHES(parse_augment_policy("wobble 0.5\n"), Error,
                       kind_is(ErrorKind::Parse));
  CHECK_THROWS_MATCHES(parse_augment_policy("hflip\n"), Error,
                       kind_is(ErrorKind::Parse));
  CHECK_THROWS_MATCHES(parse_augment_policy("hflip 2.0\n"), Error,
                       kind_is(ErrorKind::Parse));
  try {
    parse_augment_policy("hflip 0.5\nvflip zero\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("per-sample seeds separate runs, samples, and epochs") {
  uint64_t base = augment_seed(7, "a@0,0", 0);
  CHECK(augment_seed(7, "a@0,0", 0) == base);
  CHECK(augment_seed(8, "a@0,0", 0) != base);
  CHECK(augment_seed(7, "a@0,256", 0) != base);
  CHECK(augment_seed(7, "a@0,0", 1) != base);
}

TEST_CASE("synthetic palette has distinct colors at any size") {
  for (int k : {2, 3, 6, 12, 20, 40}) {
    ClassMap map = make_synthetic_class_map(k);
    REQUIRE(map.num_classes() == k);
    std::set<std::array<uint8_t, 3>> colors;
    for (const ClassEntry& e : map.entries) colors.insert(e.color);
    CHECK(colors.size() == static_cast<size_t>(k));
    CHECK(colors.count(map.ignore_color) == 0);
  }
}

TEST_CASE("synthetic datasets are deterministic and cover every class") {
  auto a = make_synthetic_dataset(5, 64, 6, 99);
  auto b = make_synthetic_dataset(5, 64, 6, 99);
  REQUIRE(a.size() == 5);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].image.pixels == b[i].image.pixels);
    CHECK(a[i].mask.values == b[i].mask.values);
    CHECK(a[i].image.height == 64);
    CHECK(a[i].image.channels == 3);
    CHECK(a[i].source_id == strf("synth-%04d", static_cast<int>(i)));

    std::set<int32_t> present(a[i].mask.values.begin(), a[i].mask.values.end());
    for (int32_t k = 0; k < 6; ++k) CHECK(present.count(k) == 1);
  }

  auto c = make_synthetic_dataset(5, 64, 6, 100);
  CHECK(c[0].image.pixels != a[0].image.pixels);
}

TEST_CASE("synthetic pixels stay near their class color") {
  ClassMap map = make_synthetic_class_map(4);
  auto data = make_synthetic_dataset(3, 48, 4, 5);
  for (const Sample& s : data)
    for (int64_t y = 0; y < 48; ++y)
      for (int64_t x = 0; x < 48; ++x) {
        const auto& color = map.entry(s.mask.at(y, x)).color;
        for (int64_t ch = 0; ch < 3; ++ch) {
          int diff = std::abs(static_cast<int>(s.image.at(y, x, ch)) -
                              static_cast<int>(color[static_cast<size_t>(ch)]));
          REQUIRE(diff <= 18);
        }
      }
}

TEST_CASE("synthetic generator rejects bad parameters") {
  CHECK_THROWS_MATCHES(make_synthetic_dataset(0, 64, 6, 0), Error,
                       kind_is(ErrorKind::InvalidArgument));
  CHECK_THROWS_MATCHES(make_synthetic_dataset(1, 8, 6, 0), Error,
                       kind_is(ErrorKind::InvalidArgument));
  CHECK_THROWS_MATCHES(make_synthetic_dataset(1, 64, 1, 0), Error,
                       kind_is(ErrorKind::InvalidArgument));
}
