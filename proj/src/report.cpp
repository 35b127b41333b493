// SPDX-License-Identifier: Apache-2.0
#include "wbft/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wbft {

namespace {

std::string level_latencies_csv_row(std::uint32_t client, std::uint32_t region,
                                    const std::string& level, std::vector<TimeNs>& lats) {
  std::sort(lats.begin(), lats.end());
  TimeNs sum = 0;
  for (auto v : lats) sum += v;
  TimeNs mean = lats.empty() ? 0 : sum / static_cast<TimeNs>(lats.size());
  TimeNs median = lats.empty() ? 0 : lats[lats.size() / 2];
  TimeNs p95 = 0;
  if (!lats.empty()) {
    std::size_t idx = (lats.size() * 95 + 99) / 100;
    p95 = lats[idx == 0 ? 0 : idx - 1];
  }
  std::ostringstream row;
  row << client << ',' << region << ',' << level << ',' << format_ms(mean) << ','
      << format_ms(median) << ',' << format_ms(p95) << ',' << lats.size() << '\n';
  return row.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_reports(const Trace& trace, const Scenario& sc, const std::string& outdir) {
  std::filesystem::create_directories(outdir);
  auto open = [&](const std::string& name) {
    std::ofstream f(outdir + "/" + name, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + outdir + "/" + name);
    return f;
  };

  {
    auto f = open("clients.csv");
    f << "client,region,level,mean_ms,median_ms,p95_ms,count\n";
    std::map<ProcessId, std::uint32_t> regions;
    std::map<std::pair<ProcessId, std::string>, std::vector<TimeNs>> lats;
    for (const auto& row : trace.ops) {
      regions[row.client] = row.region;
      const auto& op = row.op;
      if (op.first >= 0) lats[{row.client, "first"}].push_back(op.first - op.invoke);
      if (op.weak >= 0) lats[{row.client, "weak"}].push_back(op.weak - op.invoke);
      if (op.strong >= 0) lats[{row.client, "strong"}].push_back(op.strong - op.invoke);
      if (op.final_ts >= 0) lats[{row.client, "final"}].push_back(op.final_ts - op.invoke);
    }
    for (const char* level : {"first", "weak", "strong", "final"}) {
      for (auto& [key, vec] : lats) {
        if (key.second != level) continue;
        f << level_latencies_csv_row(key.first, regions[key.first], level, vec);
      }
    }
  }

  {
    auto f = open("consensus.csv");
    f << "instance,start_ms,decide_ms,mode,leader\n";
    for (const auto& row : trace.consensus) {
      f << row.instance << ',' << format_ms(row.start) << ',' << format_ms(row.decide) << ','
        << (row.fast ? "fast" : "conservative") << ',' << row.leader << '\n';
    }
  }

  {
    auto f = open("timeline.csv");
    f << "time_ms,event,detail\n";
    for (const auto& row : trace.timeline)
      f << format_ms(row.at) << ',' << csv_escape(row.event) << ',' << csv_escape(row.detail)
        << '\n';
  }

  {
    auto f = open("run_meta.csv");
    f << "key,value\n";
    std::string labels;
    for (const auto& l : sc.matrix.labels) labels += l + ";";
    std::string clients;
    for (auto r : sc.client_regions) clients += std::to_string(r) + ";";
    f << "matrix_labels," << csv_escape(labels) << '\n';
    f << "n," << sc.n << '\n';
    f << "t," << sc.t << '\n';
    f << "variant," << (sc.variant == Variant::flash ? "flash" : "conservative_only") << '\n';
    f << "weights," << (sc.weights == WeightScheme::bimodal ? "wheat" : "egalitarian") << '\n';
    f << "pattern," << (sc.pattern == Pattern::three_step ? "three_step" : "seven_step") << '\n';
    f << "seed," << sc.seed << '\n';
    f << "clients," << csv_escape(clients) << '\n';
    f << "requests_per_client," << sc.requests_per_client << '\n';
    f << "payload_bytes," << sc.payload_bytes << '\n';
    f << "think_ms_max," << format_ms(sc.think_max) << '\n';
    f << "jitter," << (sc.jitter ? "on" : "off") << '\n';
    f << "all_clients_done," << (trace.all_clients_done ? 1 : 0) << '\n';
    f << "end_ms," << format_ms(trace.end_time) << '\n';
    f << "final_epoch," << trace.final_epoch << '\n';
  }
}

LoadedReport load_report(const std::string& dir) {
  LoadedReport rep;
  auto read_lines = [&](const std::string& name) {
    std::ifstream f(dir + "/" + name);
    if (!f) throw std::runtime_error("cannot read " + dir + "/" + name);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line))
      if (!line.empty()) lines.push_back(line);
    return lines;
  };

  auto meta_lines = read_lines("run_meta.csv");
  for (std::size_t i = 1; i < meta_lines.size(); ++i) {
    auto cells = csv_cells(meta_lines[i]);
    if (cells.size() >= 2) rep.meta[cells[0]] = cells[1];
  }

  auto client_lines = read_lines("clients.csv");
  for (std::size_t i = 1; i < client_lines.size(); ++i) {
    auto cells = csv_cells(client_lines[i]);
    if (cells.size() < 7) continue;
    LevelStats st;
    st.mean_ms = std::stod(cells[3]);
    st.median_ms = std::stod(cells[4]);
    st.p95_ms = std::stod(cells[5]);
    st.count = static_cast<std::uint32_t>(std::stoul(cells[6]));
    rep.client_levels[{static_cast<std::uint32_t>(std::stoul(cells[0])), cells[2]}] = st;
  }

  auto cons_lines = read_lines("consensus.csv");
  for (std::size_t i = 1; i < cons_lines.size(); ++i) {
    auto cells = csv_cells(cons_lines[i]);
    if (cells.size() < 5) continue;
    rep.consensus_ms.push_back(std::stod(cells[2]) - std::stod(cells[1]));
  }
  return rep;
}

std::optional<CompareResult> compare_reports(const LoadedReport& baseline,
                                             const LoadedReport& candidate, std::string* error) {
  for (const char* key : {"matrix_labels", "n", "t", "clients", "requests_per_client",
                          "payload_bytes", "think_ms_max"}) {
    auto a = baseline.meta.find(key);
    auto b = candidate.meta.find(key);
    if (a == baseline.meta.end() || b == candidate.meta.end() || a->second != b->second) {
      if (error) *error = std::string("runs are not comparable: '") + key + "' differs";
      return std::nullopt;
    }
  }

  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  CompareResult out;
  double base_cons = mean(baseline.consensus_ms);
  double cand_cons = mean(candidate.consensus_ms);
  if (base_cons <= 0 || cand_cons <= 0) {
    if (error) *error = "missing consensus samples";
    return std::nullopt;
  }
  out.consensus_speedup = base_cons / cand_cons;

  // Per level: the baseline reference is always its final level, which is
  // what a client of the baseline protocol actually waits for.
  std::map<std::uint32_t, double> base_final;
  for (const auto& [key, st] : baseline.client_levels)
    if (key.second == "final") base_final[key.first] = st.mean_ms;

  for (const char* level : {"first", "weak", "strong", "final"}) {
    std::vector<double> speedups;
    for (const auto& [key, st] : candidate.client_levels) {
      if (key.second != level) continue;
      auto bit = base_final.find(key.first);
      if (bit == base_final.end() || st.mean_ms <= 0) continue;
      speedups.push_back(bit->second / st.mean_ms);
      if (std::string(level) == "final")
        out.per_client_final_speedup[key.first] = bit->second / st.mean_ms;
    }
    out.level_speedup[level] = mean(speedups);
  }
  return out;
}

void write_compare_csv(const CompareResult& cmp, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "metric,speedup\n";
  f << "consensus," << cmp.consensus_speedup << '\n';
  for (const auto& [level, s] : cmp.level_speedup) f << "level_" << level << ',' << s << '\n';
  for (const auto& [client, s] : cmp.per_client_final_speedup)
    f << "client_" << client << "_final," << s << '\n';
}

}  // namespace wbft
