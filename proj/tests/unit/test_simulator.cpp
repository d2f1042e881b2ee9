#include <doctest.h>

#include <cmath>
#include <map>

#include "sdtp/analysis.hpp"
#include "sdtp/rng.hpp"
#include "sdtp/simulator.hpp"
#include "util/instances.hpp"

using namespace sdtp;

TEST_CASE("identical configs give bit-identical traces") {
  testutil::SmallInstance inst = testutil::random_small_instance(71);
  SimConfig cfg{inst.topo, inst.cat, inst.point, 2000.0, -1.0, 42, true};
  const SimTrace a = run_sim(cfg);
  const SimTrace b = run_sim(cfg);
  REQUIRE(a.requests.size() == b.requests.size());
  REQUIRE(!a.requests.empty());
  for (size_t k = 0; k < a.requests.size(); ++k) {
    CHECK(a.requests[k].arrival == b.requests[k].arrival);
    CHECK(a.requests[k].gamma == b.requests[k].gamma);
    CHECK(a.requests[k].server == b.requests[k].server);
  }
  CHECK(a.seg_download == b.seg_download);

  SimConfig other = cfg;
  other.seed = 43;
  const SimTrace c = run_sim(other);
  bool differs = c.requests.size() != a.requests.size();
  for (size_t k = 0; !differs && k < a.requests.size(); ++k) {
    differs = a.requests[k].gamma != c.requests[k].gamma;
  }
  CHECK(differs);
}

TEST_CASE("playback recursion invariants hold for every request") {
  testutil::SmallInstance inst = testutil::random_small_instance(72);
  SimConfig cfg{inst.topo, inst.cat, inst.point, 4000.0, 100.0, 7, true};
  const SimTrace trace = run_sim(cfg);
  REQUIRE(!trace.requests.empty());
  for (const RequestRecord& rec : trace.requests) {
    const int L = rec.seg_count;
    const int cached = inst.point.placement.cached[rec.server][rec.file];
    const double* d = &trace.seg_download[rec.seg_offset];
    const double* t = &trace.seg_play[rec.seg_offset];
    CHECK(t[0] == doctest::Approx(std::max(inst.cat.startup_delay, d[0])));
    for (int g = 1; g < L; ++g) {
      // Downloads are sequential within each path; the cached and origin
      // paths run in parallel, so only same-phase ordering is guaranteed.
      if (g != cached) CHECK(d[g] >= d[g - 1] - 1e-12);
      CHECK(t[g] ==
            doctest::Approx(std::max(t[g - 1] + inst.cat.tau, d[g])));
    }
    CHECK(rec.gamma >= 0.0);
    CHECK(rec.gamma ==
          doctest::Approx(std::max(0.0, t[L - 1] - inst.cat.startup_delay -
                                            (L - 1) * inst.cat.tau)));
  }
}

TEST_CASE("lone request in an empty fast system starts at the startup delay") {
  testutil::Tiny tiny =
      testutil::tiny_instance(2, 2, 0.5, 0.01, 1e6, 0.0);
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 50.0, 0.0, 3, true};
  const SimTrace trace = run_sim(cfg);
  REQUIRE(!trace.requests.empty());
  const RequestRecord& rec = trace.requests.front();
  CHECK(rec.gamma == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(trace.seg_play[rec.seg_offset] ==
        doctest::Approx(tiny.cat.startup_delay));
}

TEST_CASE("overload emits the saturation warning") {
  testutil::Tiny tiny = testutil::tiny_instance(8, 8, 5.0, 0.01, 2.0, 0.0);
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 500.0, 0.0, 5, false};
  const SimTrace trace = run_sim(cfg);
  CHECK(trace.saturation_warning);
}

TEST_CASE("empirical dispatch frequencies match the scheduling matrices") {
  testutil::SmallInstance inst = testutil::random_small_instance(73, 3, 3, 6, 2);
  SimConfig cfg{inst.topo, inst.cat, inst.point, 30000.0, 0.0, 11, false};
  const SimTrace trace = run_sim(cfg);
  std::map<std::pair<int, int>, long> hits;
  std::map<int, long> totals;
  for (const RequestRecord& rec : trace.requests) {
    ++hits[{rec.file, rec.server}];
    ++totals[rec.file];
  }
  for (int i = 0; i < inst.cat.file_count(); ++i) {
    const long n = totals[i];
    if (n < 200) continue;
    for (int j = 0; j < inst.topo.server_count(); ++j) {
      const double p = inst.point.schedule.pi[i][j];
      const double got = static_cast<double>(hits[{i, j}]) / n;
      const double se = std::sqrt(std::max(p * (1.0 - p), 1e-9) / n);
      CHECK(std::fabs(got - p) <= 3.5 * se + 1e-9);
    }
  }
}

TEST_CASE("M/G/1 reduction: mean batch sojourn matches the transform slope") {
  // Single server, single cached stream, one fully cached file. The
  // waiting transform carries B(t) in its numerator, so its derivative at
  // zero is the mean queueing delay plus a tagged batch service time: the
  // simulated counterpart is the batch sojourn.
  testutil::Tiny tiny = testutil::tiny_instance(3, 3, 0.0, 0.01, 6.0, 0.01);
  // Target rho = lambda * L * (eta + 1/alpha) = 0.5.
  tiny.cat.arrival_rate[0] = 0.5 / (3.0 * (0.01 + 1.0 / 6.0));
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 0.0, 0.0, 17, true};
  cfg.horizon = 120000.0 / tiny.cat.arrival_rate[0];  // ~1.2e5 arrivals
  cfg.warmup = 0.1 * cfg.horizon;
  const SimTrace trace = run_sim(cfg);
  REQUIRE(trace.requests.size() > 50000);
  double mean_wait = 0.0;
  for (const RequestRecord& rec : trace.requests) {
    mean_wait += trace.seg_download[rec.seg_offset + rec.seg_count - 1];
  }
  mean_wait /= trace.requests.size();

  const StreamRates rates = stream_rates(tiny.topo, tiny.point.bandwidth);
  const double lam = tiny.cat.arrival_rate[0];
  const double rho = load_intensity_e(tiny.topo, tiny.cat,
                                      tiny.point.placement,
                                      tiny.point.schedule, rates, 0, 0);
  auto pk_at = [&](double t) {
    const MgfValue b = batch_service_mgf(QueueClass::kE, tiny.topo, tiny.cat,
                                         tiny.point.placement,
                                         tiny.point.schedule, rates, 0, 0, t);
    return pk_waiting_mgf(lam, rho, b.value, t).value;
  };
  // Richardson-extrapolated forward difference of the transform at zero.
  const double h = 1e-4;
  const double d1 = (pk_at(h) - 1.0) / h;
  const double d2 = (pk_at(h / 2) - 1.0) / (h / 2);
  const double pk_mean = 2.0 * d2 - d1;
  CHECK(std::fabs(mean_wait - pk_mean) / pk_mean < 0.05);
}

TEST_CASE("dispersion index: Poisson near one, deterministic near zero") {
  Rng rng(2024);
  std::vector<double> poisson;
  double t = 0.0;
  while (t < 1e5) {
    t += rng.exponential(1.0);
    poisson.push_back(t);
  }
  const DispersionResult pr = dispersion_index(poisson, 0.0, 1e5, 10000);
  REQUIRE(pr.conclusive);
  CHECK(pr.statistic > 0.9);
  CHECK(pr.statistic < 1.1);

  std::vector<double> regular;
  for (double x = 0.5; x < 1e5; x += 1.0) regular.push_back(x);
  const DispersionResult dr = dispersion_index(regular, 0.0, 1e5, 10000);
  REQUIRE(dr.conclusive);
  CHECK(dr.statistic < 0.2);

  const DispersionResult empty = dispersion_index({}, 0.0, 1.0, 100);
  CHECK_FALSE(empty.conclusive);
}

TEST_CASE("relay arrivals stay near-Poisson at moderate load") {
  testutil::Tiny tiny = testutil::tiny_instance(4, 0, 0.08, 0.01, 4.0, 0.005);
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 300000.0, -1.0, 23, false};
  const SimTrace trace = run_sim(cfg);
  const DispersionResult res = second_queue_arrival_check(trace);
  REQUIRE(res.conclusive);
  CHECK(res.statistic > 0.8);
  CHECK(res.statistic < 1.2);
}

TEST_CASE("work conservation on the cached-content stream") {
  testutil::Tiny tiny = testutil::tiny_instance(3, 3, 0.2, 0.01, 5.0, 0.01);
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 5000.0, 0.0, 29, true};
  const SimTrace trace = run_sim(cfg);
  double prev_completion = 0.0;
  for (const RequestRecord& rec : trace.requests) {
    const double start = rec.arrival + rec.wait_cached;
    CHECK(start == doctest::Approx(std::max(rec.arrival, prev_completion)));
    prev_completion =
        rec.arrival + trace.seg_download[rec.seg_offset + rec.seg_count - 1];
  }
}

TEST_CASE("waiting transform matches a Monte-Carlo batch-sojourn estimate") {
  // Single cached stream. The waiting transform carries the batch transform
  // B(t) in its numerator, so its simulated counterpart at positive t is
  // E[e^{t (delay + own batch service)}]: the batch sojourn. The cached
  // download transform for segment g is that factor times the g-th power of
  // the per-segment transform.
  testutil::Tiny tiny = testutil::tiny_instance(4, 4, 0.05, 0.5, 5.0, 0.01);
  SimConfig cfg{tiny.topo, tiny.cat, tiny.point, 0.0, 0.0, 31, true};
  cfg.horizon = 60000.0 / tiny.cat.arrival_rate[0];
  cfg.warmup = 0.1 * cfg.horizon;
  const SimTrace trace = run_sim(cfg);
  REQUIRE(trace.requests.size() > 20000);
  const double t = 0.5;
  double mean = 0.0, mean_sq = 0.0;
  for (const RequestRecord& rec : trace.requests) {
    const double sojourn =
        trace.seg_download[rec.seg_offset + rec.seg_count - 1];
    const double sample = std::exp(t * sojourn);
    mean += sample;
    mean_sq += sample * sample;
  }
  const double n = static_cast<double>(trace.requests.size());
  mean /= n;
  mean_sq /= n;
  const double se = std::sqrt(std::max(mean_sq - mean * mean, 0.0) / n);

  const StreamRates rates = stream_rates(tiny.topo, tiny.point.bandwidth);
  const MgfValue wait =
      cached_download_mgf(tiny.topo, tiny.cat, tiny.point.placement,
                          tiny.point.schedule, rates, 0, 0, 0, 0, t);
  REQUIRE(wait.defined);
  CHECK(std::fabs(mean - wait.value) <= 3.0 * se + 1e-9);

  const MgfValue seg2 =
      cached_download_mgf(tiny.topo, tiny.cat, tiny.point.placement,
                          tiny.point.schedule, rates, 0, 0, 0, 2, t);
  const MgfValue m = shifted_exp_mgf(rates.alpha_e[0][0],
                                     tiny.topo.servers[0].eta_e, t);
  CHECK(seg2.value == doctest::Approx(wait.value * m.value * m.value));
}

TEST_CASE("empirical tail is zero beyond the largest observed stall") {
  testutil::SmallInstance inst = testutil::random_small_instance(75, 2, 3, 6, 2);
  SimConfig cfg{inst.topo, inst.cat, inst.point, 3000.0, 0.0, 33, false};
  const SimTrace trace = run_sim(cfg);
  REQUIRE(!trace.requests.empty());
  const std::vector<EmpiricalRow> rows =
      empirical_sdtp(trace, inst.cat, {0.0, 1e9});
  for (const EmpiricalRow& row : rows) {
    if (!row.valid) continue;
    if (row.sigma == 0.0) CHECK(row.p_hat == 1.0);  // gamma >= 0 always
    if (row.sigma == 1e9) CHECK(row.p_hat == 0.0);
  }
}
