#pragma once

#include <string>
#include <vector>

#include "sdtp/analysis.hpp"
#include "sdtp/optimizer.hpp"
#include "sdtp/simulator.hpp"
#include "sdtp/types.hpp"

namespace sdtp::io {

// Provenance stamp carried by every output file (comment line in CSVs,
// a field in JSON documents). Deterministic: no timestamps.
struct Provenance {
  std::string tool;
  uint64_t seed = 0;
  std::string config_hash;

  std::string comment_line() const;
};

std::string hash_bytes_hex(const std::string& bytes);

// Topology document (JSON).
SystemTopology load_topology(const std::string& path);
void save_topology(const SystemTopology& topo, const std::string& path);

// Catalog CSV: columns file_id, segments, lambda, weight; tau/startup/sigma
// ride in a metadata comment so a round trip reproduces the full value.
VideoCatalog load_catalog_csv(const std::string& path);
void save_catalog_csv(const VideoCatalog& cat, const std::string& path,
                      const Provenance& prov);

// Control-point document (JSON): labeled sections pi, p, q, w, placement, t
// with explicit index tuples.
ControlPoint load_control_point(const std::string& path,
                                const SystemTopology& topo,
                                const VideoCatalog& cat);
void save_control_point(const ControlPoint& point, const std::string& path,
                        const Provenance& prov);

// CSV writers for command outputs.
void write_bound_csv(const std::string& path, const Provenance& prov,
                     const std::vector<double>& sigma_grid,
                     const std::vector<BoundReport>& reports);
void write_trace_csv(const std::string& path, const Provenance& prov,
                     const SimTrace& trace);
void write_segments_csv(const std::string& path, const Provenance& prov,
                        const SimTrace& trace);
void write_empirical_csv(const std::string& path, const Provenance& prov,
                         const std::vector<EmpiricalRow>& rows);
void write_opt_trace_csv(const std::string& path, const Provenance& prov,
                         const OptimizationTrace& trace);

struct CompareRow {
  std::string strategy;
  double objective = 0.0;
  std::vector<double> per_sigma;  // weighted clipped bound per grid value
};

void write_compare_csv(const std::string& path, const Provenance& prov,
                       const std::vector<double>& sigma_grid,
                       const std::vector<CompareRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Fixed shortest-exact formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace sdtp::io
