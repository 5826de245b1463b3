#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <doctest.h>

#include "leafeon/dataset_io.hpp"
#include "leafeon/errors.hpp"
#include "leafeon/raw_adc.hpp"
#include "samples.hpp"

using namespace leafeon;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "leafeon_unit";
  fs::create_directories(dir);
  return dir / name;
}

radar::ChirpConfig small_config() {
  radar::ChirpConfig cfg;
  cfg.adc_samples = 64;
  cfg.n_chirps = 4;
  return cfg;
}

radar::RadarFrame frame_for(const radar::ChirpConfig& cfg, std::uint64_t seed) {
  radar::Scene scene;
  scene.leaf = leaf::LeafState::at(leaf::LeafSpec{}, 80.0);
  scene.distance = 0.4;
  scene.snr_db = 20.0;
  return radar::synth_frame(cfg, scene, -4.0, seed);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("raw adc round trip") {
    const auto cfg = small_config();
    const fs::path path = scratch("roundtrip.lfrd");
    std::vector<radar::RadarFrame> frames;
    {
      radar::RawAdcWriter w(path, cfg);
      for (std::uint32_t i = 0; i < 3; ++i) {
        frames.push_back(frame_for(cfg, i));
        w.write(frames.back(), {i, i / 2, -4.0, 0.4, 80.0F, 7});
      }
      w.close();
    }
    CHECK(fs::file_size(path) ==
          radar::kRawHeaderBytes + 3 * (radar::kRawFrameHeaderBytes + 4 * 4 * 64 * 4));
    radar::RawAdcReader r(path, cfg);
    CHECK(r.frame_count() == 3);
    for (std::uint32_t i = 0; i < 3; ++i) {
      auto next = r.next();
      REQUIRE(next);
      const auto& [info, frame] = *next;
      CHECK(info.frame_index == i);
      CHECK(info.sample_index == i / 2);
      CHECK(info.steering_deg == -4.0);
      CHECK(info.distance_m == 0.4);
      CHECK(info.rwc == 80.0F);
      CHECK(info.group == 7);
      CHECK(frame.cube == frames[i].cube);
      CHECK(frame.steering_deg == -4.0);
    }
    CHECK_FALSE(r.next());
  }

  TEST_CASE("raw adc byte layout") {
    const auto cfg = small_config();
    const fs::path path = scratch("layout.lfrd");
    const auto frame = frame_for(cfg, 1);
    {
      radar::RawAdcWriter w(path, cfg);
      w.write(frame, {0, 0, -4.0, 0.4, 80.0F, 0});
    }
    const std::string bytes = slurp(path);
    CHECK(bytes.substr(0, 4) == "LFRD");
    std::uint64_t digest = 0;
    std::memcpy(&digest, bytes.data() + 8, 8);
    CHECK(digest == cfg.digest());
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 28, 4);
    CHECK(count == 1);
    // chirp 1, rx 2, sample 5: Q component
    const std::size_t off = radar::kRawHeaderBytes + radar::kRawFrameHeaderBytes +
                            (((1 * 4 + 2) * 64 + 5) * 2 + 1) * 2;
    std::int16_t q = 0;
    std::memcpy(&q, bytes.data() + off, 2);
    CHECK(q == radar::to_adc_code(frame.at(1, 2, 5).imag()));
  }

  TEST_CASE("raw adc rejects foreign and mismatched files") {
    const auto cfg = small_config();
    const fs::path bad = scratch("bad.lfrd");
    {
      std::ofstream out(bad, std::ios::binary);
      out << std::string(64, 'x');
    }
    CHECK(code_of([&] { radar::RawAdcReader r(bad, cfg); }) == ErrorCode::BadMagic);

    const fs::path path = scratch("mismatch.lfrd");
    {
      radar::RawAdcWriter w(path, cfg);
      w.write(frame_for(cfg, 2), {});
    }
    auto other = cfg;
    other.rx_count = 3;
    CHECK(code_of([&] { radar::RawAdcReader r(path, other); }) == ErrorCode::ConfigDigestMismatch);
    other = cfg;
    other.slope *= 1.01;
    CHECK(code_of([&] { radar::RawAdcReader r(path, other); }) == ErrorCode::ConfigDigestMismatch);
  }

  TEST_CASE("raw adc truncated frame") {
    const auto cfg = small_config();
    const fs::path path = scratch("trunc.lfrd");
    {
      radar::RawAdcWriter w(path, cfg);
      w.write(frame_for(cfg, 1), {});
      w.write(frame_for(cfg, 2), {1, 1, 0, 0, 0, 0});
    }
    fs::resize_file(path, fs::file_size(path) - 10);
    radar::RawAdcReader r(path, cfg);
    CHECK(r.next());
    CHECK(code_of([&] { r.next(); }) == ErrorCode::TruncatedFrame);
  }

  TEST_CASE("dataset round trip") {
    features::Dataset ds;
    ds.samples = testing::random_samples(3, 4, {50, 75, 100}, 4, {0.4, 0.8}, 9);
    for (auto& s : ds.samples) features::round_to_storage(s);
    ds.manifest.samples = ds.samples.size();
    ds.manifest.leaf_type = features::LeafType::Rubra;
    ds.manifest.rwc_levels = {50, 75, 100};
    ds.manifest.placements_per_level = 4;
    ds.manifest.distances = {0.4, 0.8};
    ds.manifest.steering_angles = {-10.0, -8.0, -6.0};
    ds.manifest.iota = 3;
    ds.manifest.kappa = 4;
    ds.manifest.seed = 99;
    const fs::path path = scratch("ds.lfds");
    features::write_dataset(path, ds);
    const features::Dataset back = features::read_dataset(path);
    CHECK(features::manifest_to_json(back.manifest) == features::manifest_to_json(ds.manifest));
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      CHECK(back.samples[i].location == ds.samples[i].location);
      CHECK(back.samples[i].rss == ds.samples[i].rss);
      CHECK(back.samples[i].rwc == ds.samples[i].rwc);
      CHECK(back.samples[i].distance == ds.samples[i].distance);
    }
    const fs::path again = scratch("ds2.lfds");
    features::write_dataset(again, back);
    CHECK(slurp(path) == slurp(again));

    const fs::path csv = scratch("ds.csv");
    features::write_dataset_csv(csv, ds);
    const std::string text = slurp(csv);
    CHECK(text.rfind("group,distance,rwc,loc0_eta", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 12);

    fs::resize_file(again, 20);
    CHECK(code_of([&] { features::read_dataset(again); }) == ErrorCode::IoError);
    CHECK(code_of([&] { features::read_dataset(scratch("ds.csv")); }) == ErrorCode::BadMagic);
  }

  TEST_CASE("dataset shape validation") {
    features::Dataset ds;
    ds.samples = testing::random_samples(3, 4, {50}, 2, {0.4}, 9);
    ds.manifest.iota = 2;
    ds.manifest.kappa = 4;
    ds.manifest.samples = 2;
    CHECK(code_of([&] { ds.validate(); }) == ErrorCode::ShapeMismatch);
  }
}

#include "leafeon/checkpoint.hpp"

TEST_SUITE("io") {
  TEST_CASE("checkpoint round trip") {
    const lmnet::Dims d{3, 4};
    lmnet::LmNet net(d, lmnet::Variant::Full, 4);
    net.params() = net.params().unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
    const auto samples = testing::random_samples(3, 4, {50, 100}, 6, {0.6}, 2);
    std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    features::Scaler scaler = features::fit_scaler(samples, idx, true);
    lmnet::AdamState opt = lmnet::AdamState::zeros(net.params().size());
    opt.t = 17;
    opt.m.setConstant(0.25);
    opt.v.setConstant(0.5);
    const fs::path path = scratch("model.lfnn");
    lmnet::write_checkpoint(path, net, &scaler, &opt);

    const lmnet::Checkpoint ck = lmnet::read_checkpoint(path);
    CHECK(ck.net.dims() == d);
    CHECK(ck.net.variant() == lmnet::Variant::Full);
    CHECK(ck.net.params() == net.params());
    REQUIRE(ck.scaler);
    CHECK(ck.scaler->mean == scaler.mean);
    CHECK(ck.scaler->stddev == scaler.stddev);
    CHECK(ck.scaler->degenerate == scaler.degenerate);
    REQUIRE(ck.scaler->target);
    CHECK(ck.scaler->target->lambda == scaler.target->lambda);
    REQUIRE(ck.optimizer);
    CHECK(ck.optimizer->t == 17);
    CHECK(ck.optimizer->m[5] == 0.25);

    const fs::path bare = scratch("bare.lfnn");
    lmnet::write_checkpoint(bare, net);
    const lmnet::Checkpoint b = lmnet::read_checkpoint(bare);
    CHECK_FALSE(b.scaler);
    CHECK_FALSE(b.optimizer);
    CHECK(fs::file_size(bare) < fs::file_size(path));

    lmnet::LmNet copy = b.net;
    const lmnet::Batch batch = lmnet::make_batch(samples, idx, d);
    CHECK(copy.forward(batch, lmnet::Mode::Eval) == net.forward(batch, lmnet::Mode::Eval));

    CHECK(code_of([&] { lmnet::read_checkpoint(scratch("ds.csv")); }) == ErrorCode::BadMagic);
    fs::resize_file(bare, fs::file_size(bare) / 2);
    CHECK(code_of([&] { lmnet::read_checkpoint(bare); }) == ErrorCode::IoError);
  }
}
