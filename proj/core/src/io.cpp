#include "sdtp/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sdtp/feasibility.hpp"
#include "sdtp/version.hpp"

namespace sdtp::io {

namespace {

using nlohmann::json;

json parse_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

void dump_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

std::string Provenance::comment_line() const {
  std::ostringstream os;
  os << "# " << (tool.empty() ? "sdtp" : tool) << " v" << kVersion
     << " seed=" << seed << " config=" << config_hash;
  return os.str();
}

std::string hash_bytes_hex(const std::string& bytes) {
  // FNV-1a, 64 bit.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
}

SystemTopology load_topology(const std::string& path) {
  const json j = parse_json(path);
  SystemTopology topo;
  if (!j.contains("servers") || !j["servers"].is_array()) {
    throw std::runtime_error(path + ": missing servers array");
  }
  for (const json& s : j["servers"]) {
    ServerSpec spec;
    spec.d_streams = s.at("d_streams").get<int>();
    spec.e_streams = s.at("e_streams").get<int>();
    spec.alpha_d_base = s.at("alpha_d_base").get<double>();
    spec.alpha_f_base = s.at("alpha_f_base").get<double>();
    spec.eta_d = s.value("eta_d", 0.0);
    spec.eta_dbar = s.value("eta_dbar", 0.0);
    spec.eta_e = s.value("eta_e", 0.0);
    topo.servers.push_back(spec);
  }
  topo.validate();
  return topo;
}

void save_topology(const SystemTopology& topo, const std::string& path) {
  json servers = json::array();
  for (const ServerSpec& s : topo.servers) {
    servers.push_back({{"d_streams", s.d_streams},
                       {"e_streams", s.e_streams},
                       {"alpha_d_base", s.alpha_d_base},
                       {"alpha_f_base", s.alpha_f_base},
                       {"eta_d", s.eta_d},
                       {"eta_dbar", s.eta_dbar},
                       {"eta_e", s.eta_e}});
  }
  dump_json(json{{"servers", servers}}, path);
}

VideoCatalog load_catalog_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  VideoCatalog cat;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      // Metadata comment: "# meta tau=... startup_delay=... sigma=..."
      std::istringstream ls(line.substr(1));
      std::string tok;
      while (ls >> tok) {
        const size_t eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const double val = std::strtod(tok.c_str() + eq + 1, nullptr);
        if (key == "tau") cat.tau = val;
        if (key == "startup_delay") cat.startup_delay = val;
        if (key == "sigma") cat.sigma = val;
      }
      continue;
    }
    if (line.rfind("file_id", 0) == 0) continue;  // header
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 4 columns");
    }
    cat.segments.push_back(std::stoi(cells[1]));
    cat.arrival_rate.push_back(std::strtod(cells[2].c_str(), nullptr));
    cat.weight.push_back(std::strtod(cells[3].c_str(), nullptr));
  }
  cat.validate();
  return cat;
}

void save_catalog_csv(const VideoCatalog& cat, const std::string& path,
                      const Provenance& prov) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "# meta tau=" << format_double(cat.tau)
     << " startup_delay=" << format_double(cat.startup_delay)
     << " sigma=" << format_double(cat.sigma) << '\n';
  os << "file_id,segments,lambda,weight\n";
  for (int i = 0; i < cat.file_count(); ++i) {
    os << i << ',' << cat.segments[i] << ','
       << format_double(cat.arrival_rate[i]) << ','
       << format_double(cat.weight[i]) << '\n';
  }
  write_file(path, os.str());
}

ControlPoint load_control_point(const std::string& path,
                                const SystemTopology& topo,
                                const VideoCatalog& cat) {
  const json j = parse_json(path);
  const int m = topo.server_count();
  const int r = cat.file_count();
  ControlPoint pt = uniform_control_point(topo, cat);
  auto fill2 = [&](const json& rows, auto&& setter) {
    for (const json& row : rows) setter(row);
  };
  try {
    fill2(j.at("pi"), [&](const json& row) {
      pt.schedule.pi.at(row.at(0).get<int>()).at(row.at(1).get<int>()) =
          row.at(2).get<double>();
    });
    fill2(j.at("p"), [&](const json& row) {
      pt.schedule.p.at(row.at(0).get<int>())
          .at(row.at(1).get<int>())
          .at(row.at(2).get<int>()) = row.at(3).get<double>();
    });
    fill2(j.at("q"), [&](const json& row) {
      pt.schedule.q.at(row.at(0).get<int>())
          .at(row.at(1).get<int>())
          .at(row.at(2).get<int>()) = row.at(3).get<double>();
    });
    fill2(j.at("w").at("d"), [&](const json& row) {
      pt.bandwidth.w_d.at(row.at(0).get<int>()).at(row.at(1).get<int>()) =
          row.at(2).get<double>();
    });
    fill2(j.at("w").at("dbar"), [&](const json& row) {
      pt.bandwidth.w_dbar.at(row.at(0).get<int>()).at(row.at(1).get<int>()) =
          row.at(2).get<double>();
    });
    fill2(j.at("w").at("e"), [&](const json& row) {
      pt.bandwidth.w_e.at(row.at(0).get<int>()).at(row.at(1).get<int>()) =
          row.at(2).get<double>();
    });
    fill2(j.at("placement").at("cached"), [&](const json& row) {
      pt.placement.cached.at(row.at(0).get<int>()).at(row.at(1).get<int>()) =
          row.at(2).get<int>();
    });
    for (int jj = 0; jj < m; ++jj) {
      pt.placement.capacity.at(jj) =
          j.at("placement").at("capacity").at(jj).get<double>();
    }
    for (int i = 0; i < r; ++i) {
      pt.aux.t.at(i) = j.at("t").at(i).get<double>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  pt.schedule.renormalize();
  pt.validate(topo, cat);
  return pt;
}

void save_control_point(const ControlPoint& pt, const std::string& path,
                        const Provenance& prov) {
  json j;
  j["provenance"] = {{"tool", "sdtp"},
                     {"version", kVersion},
                     {"seed", prov.seed},
                     {"config", prov.config_hash}};
  json pi = json::array(), p = json::array(), q = json::array();
  for (size_t i = 0; i < pt.schedule.pi.size(); ++i) {
    for (size_t jj = 0; jj < pt.schedule.pi[i].size(); ++jj) {
      pi.push_back({i, jj, pt.schedule.pi[i][jj]});
      for (size_t s = 0; s < pt.schedule.p[i][jj].size(); ++s) {
        p.push_back({i, jj, s, pt.schedule.p[i][jj][s]});
      }
      for (size_t s = 0; s < pt.schedule.q[i][jj].size(); ++s) {
        q.push_back({i, jj, s, pt.schedule.q[i][jj][s]});
      }
    }
  }
  j["pi"] = pi;
  j["p"] = p;
  j["q"] = q;
  json wd = json::array(), wdb = json::array(), we = json::array();
  for (size_t jj = 0; jj < pt.bandwidth.w_d.size(); ++jj) {
    for (size_t s = 0; s < pt.bandwidth.w_d[jj].size(); ++s) {
      wd.push_back({jj, s, pt.bandwidth.w_d[jj][s]});
      wdb.push_back({jj, s, pt.bandwidth.w_dbar[jj][s]});
    }
    for (size_t s = 0; s < pt.bandwidth.w_e[jj].size(); ++s) {
      we.push_back({jj, s, pt.bandwidth.w_e[jj][s]});
    }
  }
  j["w"] = {{"d", wd}, {"dbar", wdb}, {"e", we}};
  json cached = json::array();
  for (size_t jj = 0; jj < pt.placement.cached.size(); ++jj) {
    for (size_t i = 0; i < pt.placement.cached[jj].size(); ++i) {
      cached.push_back({jj, i, pt.placement.cached[jj][i]});
    }
  }
  j["placement"] = {{"cached", cached}, {"capacity", pt.placement.capacity}};
  j["t"] = pt.aux.t;
  dump_json(j, path);
}

void write_bound_csv(const std::string& path, const Provenance& prov,
                     const std::vector<double>& sigma_grid,
                     const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "file_id,sigma,raw_bound,clipped_bound,delta1,delta2,delta3,delta4,"
        "feasible\n";
  for (size_t k = 0; k < sigma_grid.size(); ++k) {
    for (const BoundRow& row : reports[k].rows) {
      os << row.file << ',' << format_double(sigma_grid[k]) << ','
         << format_double(row.raw) << ',' << format_double(row.clipped) << ','
         << format_double(row.delta1) << ',' << format_double(row.delta2)
         << ',' << format_double(row.delta3) << ','
         << format_double(row.delta4) << ',' << (row.feasible ? 1 : 0)
         << '\n';
    }
  }
  write_file(path, os.str());
}

void write_trace_csv(const std::string& path, const Provenance& prov,
                     const SimTrace& trace) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  if (trace.saturation_warning) os << "# warning saturated\n";
  os << "request_id,file_id,server,beta,nu,arrival_s,gamma_s\n";
  for (size_t k = 0; k < trace.requests.size(); ++k) {
    const RequestRecord& rec = trace.requests[k];
    os << k << ',' << rec.file << ',' << rec.server << ',' << rec.beta << ','
       << rec.nu << ',' << format_double(rec.arrival) << ','
       << format_double(rec.gamma) << '\n';
  }
  write_file(path, os.str());
}

void write_segments_csv(const std::string& path, const Provenance& prov,
                        const SimTrace& trace) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "request_id,segment,download_s,play_s\n";
  for (size_t k = 0; k < trace.requests.size(); ++k) {
    const RequestRecord& rec = trace.requests[k];
    for (int g = 0; g < rec.seg_count; ++g) {
      os << k << ',' << (g + 1) << ','
         << format_double(trace.seg_download[rec.seg_offset + g]) << ','
         << format_double(trace.seg_play[rec.seg_offset + g]) << '\n';
    }
  }
  write_file(path, os.str());
}

void write_empirical_csv(const std::string& path, const Provenance& prov,
                         const std::vector<EmpiricalRow>& rows) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "file_id,sigma,p_hat,stderr,n\n";
  for (const EmpiricalRow& row : rows) {
    if (!row.valid) continue;
    os << row.file << ',' << format_double(row.sigma) << ','
       << format_double(row.p_hat) << ',' << format_double(row.std_err) << ','
       << row.n << '\n';
  }
  write_file(path, os.str());
}

void write_opt_trace_csv(const std::string& path, const Provenance& prov,
                         const OptimizationTrace& trace) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "iteration,block,objective,max_constraint_violation\n";
  const char* names[] = {"schedule", "aux", "bandwidth", "placement"};
  for (const TraceRow& row : trace.rows) {
    os << row.outer << ',' << names[static_cast<int>(row.block)] << ','
       << format_double(row.objective) << ','
       << format_double(std::max(0.0, -row.worst_margin)) << '\n';
  }
  write_file(path, os.str());
}

void write_compare_csv(const std::string& path, const Provenance& prov,
                       const std::vector<double>& sigma_grid,
                       const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << prov.comment_line() << '\n';
  os << "strategy,objective";
  for (double s : sigma_grid) os << ",bound_sigma_" << format_double(s);
  os << '\n';
  for (const CompareRow& row : rows) {
    os << row.strategy << ',' << format_double(row.objective);
    for (double v : row.per_sigma) os << ',' << format_double(v);
    os << '\n';
  }
  write_file(path, os.str());
}

}  // namespace sdtp::io
