#include <doctest.h>

#include <cmath>

#include "sdtp/workload.hpp"
#include "util/instances.hpp"

using namespace sdtp;

TEST_CASE("generated lengths respect the Pareto support and rounding rule") {
  WorkloadSpec spec;
  spec.files = 400;
  spec.seed = 5;
  spec.rate_bands = {{200, 0.002}, {200, 0.003}};
  const VideoCatalog cat = generate_catalog(spec);
  REQUIRE(cat.file_count() == 400);
  for (int i = 0; i < cat.file_count(); ++i) {
    CHECK(cat.segments[i] >= 75);   // scale 300 s at tau = 4 s
    CHECK(cat.segments[i] <= 900);  // one-hour rejection cap
  }
  // Piecewise arrival rule: first half slower than second half.
  CHECK(cat.arrival_rate.front() == doctest::Approx(0.002));
  CHECK(cat.arrival_rate.back() == doctest::Approx(0.003));
}

TEST_CASE("catalog generation is deterministic per seed") {
  WorkloadSpec spec;
  spec.files = 64;
  spec.seed = 11;
  const VideoCatalog a = generate_catalog(spec);
  const VideoCatalog b = generate_catalog(spec);
  CHECK(a.segments == b.segments);
  spec.seed = 12;
  const VideoCatalog c = generate_catalog(spec);
  CHECK(a.segments != c.segments);
}

TEST_CASE("empirical truncated-Pareto mean matches the closed form") {
  WorkloadSpec spec;
  spec.files = 100000;
  spec.seed = 17;
  const VideoCatalog cat = generate_catalog(spec);
  double mean_len = 0.0;
  for (int L : cat.segments) mean_len += L * spec.tau;
  mean_len /= cat.file_count();
  const double expected =
      truncated_pareto_mean(spec.pareto_shape, spec.pareto_scale,
                            spec.max_length);
  // Rounding up to whole segments adds at most tau; 2% covers it.
  CHECK(std::fabs(mean_len - expected) / expected < 0.02);
}

TEST_CASE("sweeps scale the named quantity only") {
  testutil::SmallInstance base = testutil::random_small_instance(8);
  Instance inst{base.topo, base.cat};

  const auto same = sweep(inst, SweepScenario::kArrivalScale, {1.0});
  CHECK(same[0].catalog.arrival_rate == inst.catalog.arrival_rate);
  CHECK(same[0].topology.servers.size() == inst.topology.servers.size());

  const auto faster = sweep(inst, SweepScenario::kRateScale, {2.0});
  for (size_t j = 0; j < inst.topology.servers.size(); ++j) {
    CHECK(faster[0].topology.servers[j].alpha_d_base ==
          doctest::Approx(2.0 * inst.topology.servers[j].alpha_d_base));
    CHECK(faster[0].topology.servers[j].alpha_f_base ==
          doctest::Approx(2.0 * inst.topology.servers[j].alpha_f_base));
  }

  Instance wide = inst;
  wide.topology.servers[0].d_streams = 20;
  wide.topology.servers[0].e_streams = 40;
  const auto scaled = sweep(wide, SweepScenario::kStreamScale, {1.25});
  CHECK(scaled[0].topology.servers[0].d_streams == 25);
  CHECK(scaled[0].topology.servers[0].e_streams == 50);

  CHECK_THROWS_AS(sweep(inst, SweepScenario::kArrivalScale, {0.0}),
                  std::invalid_argument);
}
