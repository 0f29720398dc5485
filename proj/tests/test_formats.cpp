#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wesbench/bench/bench.hpp"
#include "wesbench/bench/config.hpp"
#include "wesbench/bench/formats.hpp"
#include "wesbench/common.hpp"
#include "wesbench/core.hpp"
#include "wesbench/msm.hpp"
#include "wesbench/tica.hpp"

using namespace wesbench;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "wesbench_format_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_text(const std::string& name,
                                 const std::string& text) {
  const std::filesystem::path p = scratch(name);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Conformation random_frame(Rng& rng, int particles, int dims) {
  Conformation c;
  c.dims = dims;
  for (int i = 0; i < particles * dims; ++i)
    c.positions.push_back(static_cast<float>(rng.normal()));
  return c;
}

} // namespace

TEST_CASE("WETB files round-trip frames and weights bit-exactly") {
  Rng rng(14, 600, 0);
  std::vector<Conformation> frames;
  std::vector<double> weights;
  for (int i = 0; i < 17; ++i) {
    frames.push_back(random_frame(rng, 5, 3));
    weights.push_back(rng.uniform() * 1e-7); // tiny magnitudes must survive
  }
  const std::filesystem::path path = scratch("roundtrip.wetrj");
  write_wetb(path, frames, weights);

  SECTION("every byte of the payload is recovered") {
    WeightedFrameSet set = read_wetb(path);
    REQUIRE(set.frames.size() == 17);
    REQUIRE(set.weights == weights);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      REQUIRE(set.frames[f].dims == 3);
      REQUIRE(set.frames[f].positions == frames[f].positions);
    }
  }

  SECTION("the header is laid out little-endian as documented") {
    const std::string bytes = read_bytes(path);
    REQUIRE(bytes.size() == 20 + 17 * 8 + 17 * 15 * 4);
    REQUIRE(bytes.substr(0, 4) == "WETB");
    auto u32_at = [&](std::size_t off) {
      return static_cast<std::uint32_t>(
          static_cast<unsigned char>(bytes[off]) |
          (static_cast<unsigned char>(bytes[off + 1]) << 8) |
          (static_cast<unsigned char>(bytes[off + 2]) << 16) |
          (static_cast<unsigned char>(bytes[off + 3]) << 24));
    };
    REQUIRE(u32_at(4) == 1);   // version
    REQUIRE(u32_at(8) == 17);  // frames
    REQUIRE(u32_at(12) == 5);  // particles
    REQUIRE(u32_at(16) == 3);  // dims
  }

  SECTION("rewriting identical content produces identical bytes") {
    const std::filesystem::path again = scratch("roundtrip2.wetrj");
    write_wetb(again, frames, weights);
    REQUIRE(read_bytes(again) == read_bytes(path));
  }

  SECTION("an empty set is a valid file") {
    const std::filesystem::path p = scratch("empty.wetrj");
    write_wetb(p, {}, {});
    WeightedFrameSet set = read_wetb(p);
    REQUIRE(set.frames.empty());
    REQUIRE(set.weights.empty());
  }

  SECTION("corrupted files are refused with an IO error") {
    std::string bytes = read_bytes(path);

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    REQUIRE_THROWS_AS(read_wetb(write_text("magic.wetrj", wrong_magic)),
                      IoError);

    std::string wrong_version = bytes;
    wrong_version[4] = 9;
    REQUIRE_THROWS_AS(read_wetb(write_text("version.wetrj", wrong_version)),
                      IoError);

    REQUIRE_THROWS_AS(
        read_wetb(write_text("short.wetrj", bytes.substr(0, 37))), IoError);
    REQUIRE_THROWS_AS(
        read_wetb(write_text("header.wetrj", bytes.substr(0, 10))), IoError);
    REQUIRE_THROWS_AS(read_wetb(write_text("extra.wetrj", bytes + "zz")),
                      IoError);
    REQUIRE_THROWS_AS(read_wetb(scratch("does_not_exist.wetrj")), IoError);
  }

  SECTION("mismatched shapes cannot be written") {
    std::vector<Conformation> bad = {random_frame(rng, 5, 3),
                                     random_frame(rng, 4, 3)};
    REQUIRE_THROWS_AS(write_wetb(scratch("bad.wetrj"), bad, {0.5, 0.5}),
                      Error);
    REQUIRE_THROWS_AS(write_wetb(scratch("bad2.wetrj"), bad, {1.0}), Error);
  }
}

TEST_CASE("fitted models survive the JSON round trip unchanged") {
  Rng rng(14, 601, 0);

  SECTION("dimensionality-reduction model") {
    Eigen::MatrixXd series(400, 3);
    double state = 0.0;
    for (int t = 0; t < 400; ++t) {
      state = 0.9 * state + rng.normal();
      series(t, 0) = state;
      series(t, 1) = 0.5 * state + rng.normal();
      series(t, 2) = rng.normal();
    }
    TicaModel model = fit_tica(series, 5, 2);
    model.features.kind = FeatureKind::PAIRWISE_DISTANCES;
    model.features.pair_list = {{0, 3}, {1, 2}};

    TicaModel back = tica_from_json(to_json(model));
    REQUIRE(back.features.kind == model.features.kind);
    REQUIRE(back.features.pair_list == model.features.pair_list);
    REQUIRE(back.mean == model.mean);
    REQUIRE(back.whitening == model.whitening);
    REQUIRE(back.singular == model.singular);
    REQUIRE(back.rotation == model.rotation);
    REQUIRE(back.transform == model.transform);
    REQUIRE(back.eigenvalues == model.eigenvalues);
    REQUIRE(back.lag == model.lag);
    REQUIRE(back.n_components == model.n_components);
    // the round-tripped model projects identically
    REQUIRE(project(back, series) == project(model, series));
  }

  SECTION("Markov state model") {
    Eigen::MatrixXd pts(200, 2);
    for (int t = 0; t < 200; ++t) {
      pts(t, 0) = rng.normal();
      pts(t, 1) = rng.normal();
    }
    MsmModel model;
    {
      RectilinearGrid grid = make_grid(pts, 6);
      std::vector<std::vector<int>> seqs = {assign_bins(grid, pts)};
      model = fit_msm(grid, seqs, 1);
    }
    MsmModel back = msm_from_json(to_json(model));
    REQUIRE(back.grid.n_per_dim == model.grid.n_per_dim);
    REQUIRE(back.grid.bounds == model.grid.bounds);
    REQUIRE(back.states == model.states);
    REQUIRE(back.kept == model.kept);
    const Eigen::MatrixXd counts_back = back.counts;
    const Eigen::MatrixXd counts_orig = model.counts;
    REQUIRE(counts_back == counts_orig);
    const Eigen::MatrixXd trans_back = back.transition;
    const Eigen::MatrixXd trans_orig = model.transition;
    REQUIRE(trans_back == trans_orig);
    REQUIRE(back.stationary == model.stationary);
    REQUIRE(back.lag == model.lag);
  }

  SECTION("macrostate model") {
    Eigen::MatrixXd tics(300, 1);
    double center = 0.0;
    for (int t = 0; t < 300; ++t) {
      if (rng.uniform() < 0.02)
        center = 6.0 - center;
      tics(t, 0) = center + 0.4 * rng.normal();
    }
    MacrostateModel model = fit_macrostates(tics, 1, 5, 2, 3);
    MacrostateModel back = macrostates_from_json(to_json(model));
    REQUIRE(back.kmeans_centers == model.kmeans_centers);
    REQUIRE(back.kept_clusters == model.kept_clusters);
    REQUIRE(back.cluster_transition == model.cluster_transition);
    REQUIRE(back.memberships == model.memberships);
    REQUIRE(back.assignment == model.assignment);
    REQUIRE(back.n_macrostates == model.n_macrostates);
  }

  SECTION("metric report") {
    MetricReport report;
    report.observables = {{"TIC 0", 0.0123, 0.5}, {"Bonds", 1e-9, 2.25}};
    report.coverage_percent = 87.5;
    report.contact_map = Eigen::MatrixXd(2, 2);
    report.contact_map << 0.0, 0.125, 0.125, 0.0;
    report.bond_band_fraction = 0.75;
    report.weighting = "msm_reweighted";
    report.gt_id = "ref";
    report.model_id = "run-1";
    MetricReport back = detail::report_from_json(detail::report_to_json(report));
    REQUIRE(back.observables.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      REQUIRE(back.observables[i].name == report.observables[i].name);
      REQUIRE(back.observables[i].kl == report.observables[i].kl);
      REQUIRE(back.observables[i].w1 == report.observables[i].w1);
    }
    REQUIRE(back.coverage_percent == 87.5);
    REQUIRE(back.contact_map == report.contact_map);
    REQUIRE(back.bond_band_fraction == 0.75);
    REQUIRE(back.weighting == "msm_reweighted");
    REQUIRE(back.gt_id == "ref");
    REQUIRE(back.model_id == "run-1");

    // reports without bond data omit the fraction and restore the sentinel
    report.bond_band_fraction = -1.0;
    ordered_json j = detail::report_to_json(report);
    REQUIRE_FALSE(j.contains("bond_band_fraction"));
    REQUIRE(detail::report_from_json(j).bond_band_fraction == -1.0);
  }

  SECTION("wrong or missing fields raise IO errors") {
    ordered_json j;
    j["kind"] = "something_else";
    REQUIRE_THROWS_AS(tica_from_json(j), IoError);
    REQUIRE_THROWS_AS(msm_from_json(j), IoError);
    REQUIRE_THROWS_AS(macrostates_from_json(j), IoError);
    REQUIRE_THROWS_AS(detail::report_from_json(j), IoError);
    REQUIRE_THROWS_AS(checkpoint_from_json(j), IoError);
    REQUIRE_THROWS_AS(run_record_from_json(j), IoError);
  }
}

TEST_CASE("run records and checkpoints reload into equal state") {
  WalkerRow initial;
  initial.id = 0;
  initial.parent_id = -1;
  initial.weight = 1.0;
  initial.pcoord = {0.25, -1.5};
  initial.frame_begin = 0;
  initial.frame_count = 3;

  IterationRecord it0;
  it0.total_weight = 1.0;
  it0.bin_edges = {{-1.0, 0.0, 1.0}, {-2.0, 2.0}};
  WalkerRow a = initial;
  a.id = 1;
  a.parent_id = 0;
  a.weight = 0.625;
  a.frame_begin = 3;
  WalkerRow b = a;
  b.id = 2;
  b.weight = 0.375;
  b.frame_begin = 6;
  b.broken = true;
  b.frame_count = 2;
  it0.walkers = {a, b};

  WeRunRecord record;
  record.initial = initial;
  record.iterations = {it0};
  record.stop_reason = "coverage target reached";

  SECTION("the walker tables round-trip exactly") {
    WeRunRecord back = run_record_from_json(run_record_to_json(record));
    REQUIRE(back.aborted == false);
    REQUIRE(back.stop_reason == record.stop_reason);
    REQUIRE(back.initial.id == 0);
    REQUIRE(back.initial.pcoord == initial.pcoord);
    REQUIRE(back.iterations.size() == 1);
    const IterationRecord& rit = back.iterations[0];
    REQUIRE(rit.total_weight == 1.0);
    REQUIRE(rit.bin_edges == it0.bin_edges);
    REQUIRE(rit.walkers.size() == 2);
    REQUIRE(rit.walkers[0].weight == 0.625);
    REQUIRE(rit.walkers[1].broken == true);
    REQUIRE(rit.walkers[1].frame_count == 2);
  }

  SECTION("frames from a companion set rebuild per-frame iterations") {
    Rng rng(14, 602, 0);
    WeightedFrameSet set;
    for (int i = 0; i < 8; ++i) {
      set.frames.push_back(random_frame(rng, 1, 2));
      set.weights.push_back(0.125);
    }
    WeRunRecord back = run_record_from_json(run_record_to_json(record), set);
    REQUIRE(back.frames.size() == 8);
    REQUIRE(back.frame_weights == std::vector<double>(8, 0.125));
    // rows a and b cover frames 3..7 in iteration 0
    for (std::size_t f = 3; f < 8; ++f)
      REQUIRE(back.frame_iteration[f] == 0);

    WalkerRow runaway = a;
    runaway.frame_begin = 7;
    runaway.frame_count = 5;
    WeRunRecord bad = record;
    bad.iterations[0].walkers.push_back(runaway);
    REQUIRE_THROWS_AS(run_record_from_json(run_record_to_json(bad), set),
                      IoError);
  }

  SECTION("checkpoints preserve walker coordinates bit-exactly") {
    WeCheckpoint ck;
    ck.config_hash = "00ff00ff00ff00ff";
    ck.completed_iterations = 12;
    ck.next_id = 99;
    ck.frames_written = 480;
    ck.stop_reason = "";
    Rng rng(14, 603, 0);
    for (int i = 0; i < 3; ++i) {
      Walker w;
      w.id = 20 + i;
      w.parent_id = 10 + i;
      w.weight = std::pow(0.1, i + 1); // not exactly representable
      w.iteration = 12;
      w.pcoord = {rng.normal(), rng.normal()};
      w.state = random_frame(rng, 4, 3);
      ck.ensemble.push_back(std::move(w));
    }
    WeCheckpoint back = checkpoint_from_json(to_json(ck));
    REQUIRE(back.config_hash == ck.config_hash);
    REQUIRE(back.completed_iterations == 12);
    REQUIRE(back.next_id == 99);
    REQUIRE(back.frames_written == 480);
    REQUIRE(back.finished == false);
    REQUIRE(back.aborted == false);
    REQUIRE(back.ensemble.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(back.ensemble[i].id == ck.ensemble[i].id);
      REQUIRE(back.ensemble[i].parent_id == ck.ensemble[i].parent_id);
      REQUIRE(back.ensemble[i].weight == ck.ensemble[i].weight);
      REQUIRE(back.ensemble[i].iteration == 12);
      REQUIRE(back.ensemble[i].pcoord == ck.ensemble[i].pcoord);
      REQUIRE(back.ensemble[i].state.dims == 3);
      REQUIRE(back.ensemble[i].state.positions ==
              ck.ensemble[i].state.positions);
    }
  }

  SECTION("JSON files pass through disk unchanged") {
    const std::filesystem::path p = scratch("record.json");
    detail::write_json(p, run_record_to_json(record));
    ordered_json j = detail::read_json(p);
    REQUIRE(j == run_record_to_json(record));
    REQUIRE_THROWS_AS(detail::read_json(write_text("broken.json", "{oops")),
                      IoError);
    REQUIRE_THROWS_AS(detail::read_json(scratch("missing.json")), IoError);
  }
}

TEST_CASE("config files populate every setting with anchored errors") {
  SECTION("a minimal file yields the documented defaults") {
    BenchmarkConfig cfg = load_config(write_text(
        "minimal.json", "{\n  \"system\": {\"kind\": \"double_well_2d\"}\n}\n"));
    REQUIRE(cfg.system.kind == PotentialKind::DOUBLE_WELL_2D);
    REQUIRE(cfg.system.temperature == 1.0);
    REQUIRE(cfg.propagator.steps_per_segment == 1000);
    REQUIRE(cfg.propagator.save_interval == 100);
    REQUIRE(cfg.propagator.dt == 0.005);
    REQUIRE(cfg.propagator.friction == 1.0);
    REQUIRE(cfg.propagator.kT == 1.0);
    REQUIRE(cfg.tica.lag == 10);
    REQUIRE(cfg.tica.n_components == 4);
    REQUIRE(cfg.tica.features.kind == FeatureKind::RAW_COORDS_2D);
    REQUIRE(cfg.we.walkers_per_bin == 3);
    REQUIRE(cfg.we.max_iterations == 200);
    REQUIRE(cfg.we.bins_per_dim == 7);
    REQUIRE(cfg.we.pcoord_dims == 2);
    REQUIRE(cfg.we.bottleneck_bins == true);
    REQUIRE(cfg.we.coverage_target == 0.0);
    REQUIRE(cfg.we.coverage_check_interval == 10);
    REQUIRE(cfg.reference.n_starts == 4);
    REQUIRE(cfg.reference.segments_each == 250);
    REQUIRE(cfg.msm.grid_n == 80);
    REQUIRE(cfg.msm.lag == 1);
    REQUIRE(cfg.macrostates.n_clusters == 100);
    REQUIRE(cfg.macrostates.n_macrostates == 5);
    REQUIRE(cfg.metrics.coverage_grid == 100);
    REQUIRE(cfg.metrics.histogram_bins == 100);
    REQUIRE(cfg.metrics.kl_epsilon == 1e-12);
    REQUIRE(cfg.metrics.weighting_mode == WeightSource::WE_WEIGHTED);
    REQUIRE(cfg.seed == 0);
    REQUIRE(cfg.output_dir == "out");
    // the propagator inherits the system and seed
    REQUIRE(cfg.propagator.potential.kind == cfg.system.kind);
    REQUIRE(cfg.propagator.seed_base == cfg.seed);
  }

  SECTION("chain systems default to distance featurization") {
    BenchmarkConfig cfg = load_config(write_text(
        "chain.json", "{\"system\": {\"kind\": \"cg_chain_3d\"}}"));
    REQUIRE(cfg.tica.features.kind == FeatureKind::PAIRWISE_DISTANCES);
    REQUIRE(cfg.system.dims() == 3);
  }

  SECTION("explicit settings override the defaults") {
    BenchmarkConfig cfg = load_config(write_text("full.json", R"({
      "system": {"kind": "double_well_2d", "temperature": 0.4,
                 "double_well": {"a": 2.0, "b": 3.0},
                 "start": [0.5, -0.25]},
      "propagator": {"steps_per_segment": 600, "save_interval": 200,
                     "dt": 0.001, "friction": 2.0},
      "reference": {"n_starts": 2, "segments_each": 30},
      "tica": {"lag": 4, "n_components": 2,
               "featurization": "raw_coords_2d"},
      "we": {"walkers_per_bin": 5, "max_iterations": 40, "bins_per_dim": 9,
             "pcoord_dims": 1, "bottleneck_bins": false,
             "coverage_target": 95.5, "coverage_check_interval": 5},
      "msm": {"grid_n": 40, "lag": 2},
      "macrostates": {"n_clusters": 20, "n_macrostates": 3},
      "metrics": {"coverage_grid": 50, "histogram_bins": 64,
                  "kl_epsilon": 1e-10, "weighting_mode": "msm_reweighted"},
      "seed": 1234,
      "output_dir": "results/run1"
    })"));
    REQUIRE(cfg.system.temperature == 0.4);
    REQUIRE(cfg.system.double_well.a == 2.0);
    REQUIRE(cfg.system.double_well.b == 3.0);
    REQUIRE(cfg.start == std::vector<double>{0.5, -0.25});
    REQUIRE(cfg.propagator.steps_per_segment == 600);
    REQUIRE(cfg.propagator.save_interval == 200);
    REQUIRE(cfg.propagator.dt == 0.001);
    REQUIRE(cfg.propagator.friction == 2.0);
    REQUIRE(cfg.propagator.kT == 0.4); // follows temperature when unpinned
    REQUIRE(cfg.reference.n_starts == 2);
    REQUIRE(cfg.reference.segments_each == 30);
    REQUIRE(cfg.tica.lag == 4);
    REQUIRE(cfg.tica.n_components == 2);
    REQUIRE(cfg.we.walkers_per_bin == 5);
    REQUIRE(cfg.we.max_iterations == 40);
    REQUIRE(cfg.we.bins_per_dim == 9);
    REQUIRE(cfg.we.pcoord_dims == 1);
    REQUIRE(cfg.we.bottleneck_bins == false);
    REQUIRE(cfg.we.coverage_target == 95.5);
    REQUIRE(cfg.we.coverage_check_interval == 5);
    REQUIRE(cfg.msm.grid_n == 40);
    REQUIRE(cfg.msm.lag == 2);
    REQUIRE(cfg.macrostates.n_clusters == 20);
    REQUIRE(cfg.macrostates.n_macrostates == 3);
    REQUIRE(cfg.metrics.coverage_grid == 50);
    REQUIRE(cfg.metrics.histogram_bins == 64);
    REQUIRE(cfg.metrics.kl_epsilon == 1e-10);
    REQUIRE(cfg.metrics.weighting_mode == WeightSource::MSM_REWEIGHTED);
    REQUIRE(cfg.seed == 1234);
    REQUIRE(cfg.output_dir == "results/run1");
  }

  SECTION("a pinned noise temperature wins over the system temperature") {
    BenchmarkConfig cfg = load_config(write_text(
        "pinned.json", "{\"system\": {\"kind\": \"double_well_2d\", "
                       "\"temperature\": 0.4}, "
                       "\"propagator\": {\"kT\": 0.9}}"));
    REQUIRE(cfg.propagator.kT == 0.9);
  }

  SECTION("unknown keys are rejected at their line") {
    const std::filesystem::path p = write_text("unknown.json",
                                               "{\n"
                                               "  \"system\": {\n"
                                               "    \"kind\": \"double_well_2d\",\n"
                                               "    \"turbo\": true\n"
                                               "  }\n"
                                               "}\n");
    REQUIRE_THROWS_MATCHES(load_config(p), ConfigError,
                           MessageMatches(ContainsSubstring(":4:") &&
                               ContainsSubstring("unknown key") &&
                               ContainsSubstring("turbo")));
  }

  SECTION("duplicate keys are rejected at their line") {
    const std::filesystem::path p = write_text("dup.json",
                                               "{\n"
                                               "  \"system\": {\"kind\": \"double_well_2d\"},\n"
                                               "  \"seed\": 1,\n"
                                               "  \"seed\": 2\n"
                                               "}\n");
    REQUIRE_THROWS_MATCHES(load_config(p), ConfigError,
                           MessageMatches(ContainsSubstring(":4:") &&
                               ContainsSubstring("duplicate key")));
  }

  SECTION("type and value violations carry their location") {
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("typo.json",
                               "{\n  \"system\": {\"kind\": \"double_well_2d\"},\n"
                               "  \"propagator\": {\"dt\": \"fast\"}\n}\n")),
        ConfigError, MessageMatches(ContainsSubstring(":3:") && ContainsSubstring("number")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("neg.json",
                               "{\"system\": {\"kind\": \"double_well_2d\"},\n"
                               " \"propagator\": {\"dt\": -0.1}}")),
        ConfigError, MessageMatches(ContainsSubstring(":2:")));
    REQUIRE_THROWS_AS(
        load_config(write_text("unparsable.json", "{\"system\": }")),
        ConfigError);
    REQUIRE_THROWS_AS(load_config(write_text("toplevel.json", "[1, 2]")),
                      ConfigError);
    REQUIRE_THROWS_AS(load_config(write_text("trailing.json", "{} {}")),
                      ConfigError);
  }

  SECTION("cross-field validation") {
    REQUIRE_THROWS_MATCHES(
        load_config(write_text(
            "stride.json",
            "{\"system\": {\"kind\": \"double_well_2d\"},\n"
            " \"propagator\": {\"steps_per_segment\": 7, \"save_interval\": 3}}")),
        ConfigError, MessageMatches(ContainsSubstring("multiple of save_interval")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("pcoord.json",
                               "{\"system\": {\"kind\": \"double_well_2d\"},\n"
                               " \"tica\": {\"n_components\": 1},\n"
                               " \"we\": {\"pcoord_dims\": 2}}")),
        ConfigError, MessageMatches(ContainsSubstring("pcoord_dims")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("missing_system.json", "{\"seed\": 3}")),
        ConfigError, MessageMatches(ContainsSubstring("system")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text(
            "wrong_params.json",
            "{\"system\": {\"kind\": \"cg_chain_3d\",\n"
            "              \"double_well\": {\"a\": 1.0}}}")),
        ConfigError, MessageMatches(ContainsSubstring("different system kind")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("macro.json",
                               "{\"system\": {\"kind\": \"double_well_2d\"},\n"
                               " \"macrostates\": {\"n_clusters\": 3,\n"
                               "                   \"n_macrostates\": 5}}")),
        ConfigError, MessageMatches(ContainsSubstring("n_macrostates")));
    REQUIRE_THROWS_MATCHES(
        load_config(write_text("kind.json", "{\"system\": {\"kind\": \"bogus\"}}")),
        ConfigError, MessageMatches(ContainsSubstring("double_well_2d")));
    REQUIRE_THROWS_AS(
        load_config(write_text(
            "start.json", "{\"system\": {\"kind\": \"double_well_2d\",\n"
                          "              \"start\": [1.0, 2.0, 3.0]}}")),
        DimensionMismatch);
  }
}

TEST_CASE("the trajectory-shaping hash ignores analysis-only settings") {
  auto base = [] {
    BenchmarkConfig cfg;
    cfg.propagator.potential = cfg.system;
    cfg.propagator.seed_base = cfg.seed;
    return cfg;
  };
  const std::string tica_bytes = "model-bytes-v1";
  const std::string h0 = we_config_hash(base(), tica_bytes);

  SECTION("the hash is stable and hex-shaped") {
    REQUIRE(h0 == we_config_hash(base(), tica_bytes));
    REQUIRE(h0.size() == 16);
    REQUIRE(h0.find_first_not_of("0123456789abcdef") == std::string::npos);
  }

  SECTION("trajectory-shaping settings change the hash") {
    BenchmarkConfig cfg = base();
    cfg.propagator.dt = 0.001;
    REQUIRE(we_config_hash(cfg, tica_bytes) != h0);

    cfg = base();
    cfg.seed = 99;
    REQUIRE(we_config_hash(cfg, tica_bytes) != h0);

    cfg = base();
    cfg.we.walkers_per_bin = 4;
    REQUIRE(we_config_hash(cfg, tica_bytes) != h0);

    cfg = base();
    cfg.system.temperature = 0.7;
    REQUIRE(we_config_hash(cfg, tica_bytes) != h0);

    cfg = base();
    cfg.we.bottleneck_bins = false;
    REQUIRE(we_config_hash(cfg, tica_bytes) != h0);

    REQUIRE(we_config_hash(base(), "model-bytes-v2") != h0);
  }

  SECTION("run length and analysis settings do not") {
    BenchmarkConfig cfg = base();
    cfg.we.max_iterations = 5000;
    cfg.msm.grid_n = 10;
    cfg.msm.lag = 7;
    cfg.macrostates.n_clusters = 17;
    cfg.metrics.histogram_bins = 3;
    cfg.metrics.weighting_mode = WeightSource::RAW_UNWEIGHTED;
    cfg.reference.segments_each = 9;
    cfg.tica.lag = 99; // only the fitted model bytes matter downstream
    cfg.output_dir = "elsewhere";
    REQUIRE(we_config_hash(cfg, tica_bytes) == h0);
  }
}
