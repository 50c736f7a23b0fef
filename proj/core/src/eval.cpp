#include "teimit/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "teimit/error.hpp"
#include "teimit/io.hpp"

namespace teimit {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class F>
double median_ms(int repeats, F&& f) {
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    t.push_back(ms_since(t0));
  }
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double positive_optimum(const CanonicalLP& lp, const Solution& optimal_x) {
  const double f = objective(lp, optimal_x);
  if (!(f > 0.0)) throw UndefinedMetric("optimal objective is not positive");
  return f;
}

}  // namespace

double ogap(const CanonicalLP& lp, const Solution& model_x, const Solution& optimal_x) {
  const double f_opt = positive_optimum(lp, optimal_x);
  return std::abs(f_opt - objective(lp, model_x)) / f_opt;
}

double cgap(const CanonicalLP& lp, const Solution& model_x) {
  if ((model_x.array() < 0.0).any()) throw ValidationError("cgap: solution must be nonnegative");
  const Vector viol = constraint_violations(lp, model_x);
  double total = 0.0;
  for (Eigen::Index j = 0; j < viol.size(); ++j) total += viol[j] / lp.b[j];
  return total;
}

double cgap_per_constraint(const CanonicalLP& lp, const Solution& model_x) {
  return lp.num_rows() ? cgap(lp, model_x) / lp.num_rows() : 0.0;
}

double onocgap(const CanonicalLP& lp, const Solution& model_x, const Solution& optimal_x) {
  const Solution scaled = scale_to_feasible(lp, model_x);
  if (constraint_violations(lp, scaled).maxCoeff() > 0.0) {
    throw Error("onocgap: scaled solution is not feasible");
  }
  return ogap(lp, scaled, optimal_x);
}

Summary summarize(std::vector<double> v) {
  Summary s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  s.p50 = quantile(v, 0.5);
  s.p90 = quantile(v, 0.9);
  s.p99 = quantile(v, 0.99);
  return s;
}

double EvalReport::mean(double EvalRecord::*field) const {
  double sum = 0.0;
  int n = 0;
  for (const EvalRecord& r : records) {
    if (r.excluded) continue;
    sum += r.*field;
    ++n;
  }
  return n ? sum / n : 0.0;
}

nlohmann::json EvalReport::aggregates() const {
  nlohmann::json out = nlohmann::json::object();
  const std::vector<std::pair<const char*, double EvalRecord::*>> fields = {
      {"ogap", &EvalRecord::ogap},
      {"cgap", &EvalRecord::cgap},
      {"cgap_per_constraint", &EvalRecord::cgap_per_constraint},
      {"onocgap", &EvalRecord::onocgap},
      {"model_ms", &EvalRecord::model_ms},
      {"model_e2e_ms", &EvalRecord::model_e2e_ms},
      {"ipm_ms", &EvalRecord::ipm_ms}};
  for (const auto& [name, field] : fields) {
    std::vector<double> v;
    for (const EvalRecord& r : records) {
      if (!r.excluded) v.push_back(r.*field);
    }
    if (v.empty()) continue;
    const Summary s = summarize(std::move(v));
    out[name] = {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev},
                 {"p50", s.p50},     {"p90", s.p90},   {"p99", s.p99}};
  }
  return out;
}

EvalReport benchmark(const std::vector<EvalInstance>& instances, const ModelParameters& params,
                     const BenchmarkOptions& options) {
  if (options.repeats < 1) throw ValidationError("benchmark: repeats must be >= 1");
  const int K = options.K > 0 ? options.K : params.config.K_max;
  EvalReport report;
  for (const EvalInstance& inst : instances) {
    EvalRecord r;
    r.id = inst.id;
    r.num_nodes = inst.num_nodes;
    r.num_links = inst.num_links;
    r.num_pairs = inst.num_pairs;
    r.num_paths = inst.lp.num_cols();

    Solution opt = inst.optimal_x;
    if (opt.size() == 0) {
      try {
        opt = solve(inst.lp, options.ipm).final_x;
      } catch (const SolverError& e) {
        r.excluded = true;
        r.note = std::string("reference solve failed: ") + e.what();
      }
    }
    if (!r.excluded) {
      const LPGraph graph = encode(normalize(inst.lp), options.attributes);
      const auto ops = prepare(graph);
      const Solution x = decode_solution(graph, predict(*ops, params, K));  // also warms up
      r.model_ms = median_ms(options.repeats, [&] { (void)predict(*ops, params, K); });
      r.model_e2e_ms = median_ms(options.repeats, [&] {
        const LPGraph g = encode(normalize(inst.lp), options.attributes);
        (void)decode_solution(g, predict(*prepare(g), params, K));
      });
      if (options.time_ipm) {
        r.ipm_ms = median_ms(options.repeats, [&] { (void)solve(inst.lp, options.ipm); });
      }
      try {
        r.f_opt = objective(inst.lp, opt);
        r.f_model = objective(inst.lp, x);
        r.ogap = ogap(inst.lp, x, opt);
        r.cgap = cgap(inst.lp, x);
        r.cgap_per_constraint = cgap_per_constraint(inst.lp, x);
        r.onocgap = onocgap(inst.lp, x, opt);
      } catch (const UndefinedMetric& e) {
        r.excluded = true;
        r.note = e.what();
      }
    }
    if (r.excluded) ++report.excluded;
    report.records.push_back(std::move(r));
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json recs = nlohmann::json::array();
  for (const EvalRecord& r : report.records) {
    nlohmann::json j = {{"id", r.id},
                        {"num_nodes", r.num_nodes},
                        {"num_links", r.num_links},
                        {"num_pairs", r.num_pairs},
                        {"num_paths", r.num_paths},
                        {"excluded", r.excluded}};
    if (!r.note.empty()) j["note"] = r.note;
    if (!r.excluded) {
      j.update({{"f_opt", r.f_opt},
                {"f_model", r.f_model},
                {"ogap", r.ogap},
                {"cgap", r.cgap},
                {"cgap_per_constraint", r.cgap_per_constraint},
                {"onocgap", r.onocgap},
                {"model_ms", r.model_ms},
                {"model_e2e_ms", r.model_e2e_ms},
                {"ipm_ms", r.ipm_ms}});
    }
    recs.push_back(std::move(j));
  }
  return {{"tool_version", TEIMIT_VERSION},
          {"recipe_hash", report.recipe_hash},
          {"metadata", report.metadata},
          {"num_instances", report.records.size()},
          {"excluded", report.excluded},
          {"aggregates", report.aggregates()},
          {"records", std::move(recs)}};
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(10);
  out << "id,num_nodes,num_links,num_pairs,num_paths,excluded,f_opt,f_model,ogap,cgap,"
         "cgap_per_constraint,onocgap,model_ms,model_e2e_ms,ipm_ms\n";
  for (const EvalRecord& r : report.records) {
    out << r.id << ',' << r.num_nodes << ',' << r.num_links << ',' << r.num_pairs << ','
        << r.num_paths << ',' << (r.excluded ? 1 : 0) << ',' << r.f_opt << ',' << r.f_model << ','
        << r.ogap << ',' << r.cgap << ',' << r.cgap_per_constraint << ',' << r.onocgap << ','
        << r.model_ms << ',' << r.model_e2e_ms << ',' << r.ipm_ms << '\n';
  }
  return out.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& dir,
                  bool include_encoding_time) {
  std::filesystem::create_directories(dir);
  nlohmann::json j = to_json(report);
  j["primary_model_time"] = include_encoding_time ? "model_e2e_ms" : "model_ms";
  write_json_atomic(dir / "report.json", j, 2);
  write_text_atomic(dir / "report.csv", report_csv(report));

  auto grouped = [&](int EvalRecord::*key) {
    std::map<int, std::vector<const EvalRecord*>> g;
    for (const EvalRecord& r : report.records) {
      if (!r.excluded) g[r.*key].push_back(&r);
    }
    return g;
  };
  auto med = [](std::vector<const EvalRecord*> rs, double EvalRecord::*f) {
    std::vector<double> v;
    for (const EvalRecord* r : rs) v.push_back(r->*f);
    return summarize(std::move(v)).p50;
  };
  auto mean = [](std::vector<const EvalRecord*> rs, double EvalRecord::*f) {
    std::vector<double> v;
    for (const EvalRecord* r : rs) v.push_back(r->*f);
    return summarize(std::move(v)).mean;
  };

  std::ostringstream gap;
  gap.precision(10);
  gap << "num_nodes,count,ogap_mean,onocgap_mean,cgap_mean\n";
  for (const auto& [n, rs] : grouped(&EvalRecord::num_nodes)) {
    gap << n << ',' << rs.size() << ',' << mean(rs, &EvalRecord::ogap) << ','
        << mean(rs, &EvalRecord::onocgap) << ',' << mean(rs, &EvalRecord::cgap) << '\n';
  }
  write_text_atomic(dir / "gap_vs_nodes.csv", gap.str());

  auto timing = [&](int EvalRecord::*key, const char* name) {
    std::ostringstream t;
    t.precision(10);
    t << name << ",count,model_ms_median,model_e2e_ms_median,ipm_ms_median\n";
    for (const auto& [n, rs] : grouped(key)) {
      t << n << ',' << rs.size() << ',' << med(rs, &EvalRecord::model_ms) << ','
        << med(rs, &EvalRecord::model_e2e_ms) << ',' << med(rs, &EvalRecord::ipm_ms) << '\n';
    }
    return t.str();
  };
  write_text_atomic(dir / "time_vs_nodes.csv", timing(&EvalRecord::num_nodes, "num_nodes"));
  write_text_atomic(dir / "time_vs_pairs.csv", timing(&EvalRecord::num_pairs, "num_pairs"));
}

}  // namespace teimit
