#include "app.hpp"
#include "config.hpp"

#include "pertlab/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace pertlab::app {

namespace {

// A mathematical check failed; reported with exit code 1.
class CheckFailure : public Error {
 public:
  using Error::Error;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  Json j;
  in >> j;
  return j;
}

std::string clean(std::string s) {
  for (auto& c : s)
    if (c == '\t' || c == '\n') c = ' ';
  return s;
}

std::string real_text(long double v) { return format_real(v); }

std::string tsv_kv(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ostringstream os;
  os << "key\tvalue\n";
  for (const auto& [k, v] : rows) os << k << '\t' << clean(v) << '\n';
  return os.str();
}

ExperimentConfig resolve_config(const Options& o) {
  if (o.config) return load_config(*o.config);
  const fs::path saved = fs::path(o.out) / "config.json";
  if (fs::exists(saved)) return load_config(saved.string());
  throw DomainError("no --config given and no config.json in " + o.out);
}

ConstructionPlan load_plan(const Options& o) {
  const fs::path path = o.input ? fs::path(*o.input) : fs::path(o.out) / "plan.json";
  if (!fs::exists(path)) throw DomainError("plan file not found: " + path.string());
  return ConstructionPlan::from_json(read_json(path));
}

void prepare(const ExperimentConfig& cfg, const Options& o) {
  set_point_budget(cfg.point_budget);
  set_worker_count(o.threads);
  fs::create_directories(o.out);
}

int certify_u(const ExperimentConfig& cfg, const ConstructionPlan& plan, const Options& o) {
  const int u = o.u ? *o.u : cfg.certify_u ? *cfg.certify_u : plan.u_max;
  if (u < plan.u_min || u > plan.u_max) throw DomainError("u = " + std::to_string(u) + " is not covered by the plan");
  return u;
}

std::int64_t audit_radius_for(const ExperimentConfig& cfg, int u) {
  return cfg.audit_radius ? *cfg.audit_radius : 8 * (std::int64_t{1} << u);
}

struct WitnessRun {
  PigeonholeResult pigeon;
  std::optional<WitnessFunction> f;
  Certificate cert;
};

WitnessRun run_witness(const PerturbedSet& s, const ConstructionPlan& plan, int u, std::int64_t L,
                       std::size_t samples) {
  WitnessRun w;
  try {
    w.pigeon = pigeonhole_Hj(plan, u);
  } catch (const DomainError&) {
    throw;
  } catch (const Error& e) {
    throw CheckFailure(e.what());
  }
  w.f.emplace(build_f(u, witness_exponent(plan), plan.d, w.pigeon.H, w.pigeon.j));
  w.cert = evaluate_divergence(s, plan, *w.f, L, samples);
  return w;
}

std::vector<BigInt> tower_radii(const ExperimentConfig& cfg, const Options& o, const WitnessLevel& w) {
  if (o.t) return {parse_bigint(*o.t)};
  if (!cfg.t_values.empty()) return cfg.t_values;
  const BigInt t0 = minimal_tower_radius(w.f.dim, w.delta, cfg.epsilon / 2);
  std::vector<BigInt> out;
  for (auto m : cfg.t_multipliers) out.push_back(t0 * m);
  return out;
}

struct TransferOutcome {
  Json json;
  std::string tsv;
  bool pass = true;
};

TransferOutcome run_transfer(const ExperimentConfig& cfg, const Options& o, const PerturbedSet& s,
                             const ConstructionPlan& plan, int u, const WitnessRun& wr) {
  TransferOutcome out;
  const OrliczGauge gauge = OrliczGauge::power_gauge(witness_exponent(plan));
  const WitnessLevel level = witness_level(s, plan, *wr.f);
  Json rows = Json::array();
  std::ostringstream tsv;
  tsv << "t\talpha\tu\tepsilon\tdelta\ttrim_fraction\torlicz_integral\tM\tK\texceedance_mass\tbound\tstatus\n";
  auto emit = [&](const TransferRow& r) {
    tsv << to_string(r.t) << '\t' << (r.alpha ? std::to_string(*r.alpha) : "NA") << '\t'
        << (r.u ? std::to_string(*r.u) : "NA") << '\t' << to_string(r.epsilon) << '\t' << to_string(r.delta) << '\t'
        << real_text(to_double(r.trim_fraction)) << '\t' << real_text(r.orlicz_integral) << '\t' << real_text(r.M)
        << '\t' << real_text(r.K) << '\t' << real_text(to_double(r.exceedance_mass)) << '\t'
        << real_text(to_double(r.bound)) << '\t' << r.status << '\n';
  };
  for (const auto& t : tower_radii(cfg, o, level)) {
    TransferRow r = transfer_at(level, gauge, wr.cert.threshold, cfg.epsilon, t);
    // the tower needs a passing lattice certificate
    if (wr.cert.pass && !r.pass) out.pass = false;
    rows.push_back(r.to_json());
    emit(r);
  }
  std::vector<WitnessLevel> levels;
  for (int v = plan.u_min; v <= plan.u_max; ++v) {
    if (v == u) {
      levels.push_back(level);
      continue;
    }
    const auto ph = pigeonhole_Hj(plan, v);
    levels.push_back(witness_level(s, plan, build_f(v, witness_exponent(plan), plan.d, ph.H, ph.j)));
  }
  const int amax = o.alpha ? *o.alpha : cfg.alpha_max;
  const SynthesisReport syn = synthesize_g(levels, gauge, std::min(cfg.alpha_min, amax), amax, std::nullopt);
  for (const auto& r : syn.rows) emit(r);
  out.pass = out.pass && syn.pass;
  out.json = Json{{"u", u},
                  {"gauge", gauge.name},
                  {"K", static_cast<double>(wr.cert.threshold)},
                  {"towers", rows},
                  {"synthesis", syn.to_json()},
                  {"pass", out.pass}};
  out.tsv = tsv.str();
  return out;
}

// --- commands ------------------------------------------------------------------

int cmd_construct(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  prepare(cfg, o);
  const ConstructionPlan plan = build_plan(cfg.construction());
  const auto s = assemble_S(plan);
  const fs::path dir(o.out);
  write_json(dir / "config.json", cfg.to_json());
  write_json(dir / "plan.json", plan.to_json());
  write_json(dir / "set.json", s->to_json());
  const auto& last = plan.records.back().choice;
  write_file(dir / "construct.tsv", tsv_kv({{"regime", to_string(plan.regime)},
                                            {"d", std::to_string(plan.d)},
                                            {"q", plan.q.to_string()},
                                            {"p", plan.p ? plan.p->to_string() : "NA"},
                                            {"u_min", std::to_string(plan.u_min)},
                                            {"u_max", std::to_string(plan.u_max)},
                                            {"records", std::to_string(plan.records.size())},
                                            {"skips", std::to_string(plan.skips.size())},
                                            {"candidates", std::to_string(plan.candidates)},
                                            {"last_n_k", to_string(last.n)},
                                            {"last_quota", to_string(last.quota)}}));
  out << "construct: " << plan.records.size() << " blocks k, last n_k = " << to_string(last.n) << "\n";
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  prepare(cfg, o);
  const ConstructionPlan plan = load_plan(o);
  const VerifyReport rep = verify_plan(plan);
  Json j = rep.to_json();
  std::optional<SeriesBound> series;
  if (plan.regime == Regime::T2 || plan.p) series = lp_series_bound(plan.regime, plan.q, plan.p, plan.d, 60);
  j["series"] = series ? series->to_json() : Json(nullptr);
  const fs::path dir(o.out);
  write_json(dir / "verify.json", j);

  std::ostringstream checks;
  checks << "check\tk\tpass\tdetail\n";
  std::size_t failed = 0;
  for (const auto& c : rep.checks) {
    checks << c.name << '\t' << (c.k ? to_string(*c.k) : "NA") << '\t' << (c.pass ? 1 : 0) << '\t' << clean(c.detail)
           << '\n';
    if (!c.pass) {
      ++failed;
      out << "FAIL " << c.name << (c.k ? " at k = " + to_string(*c.k) : std::string()) << ": " << c.detail << "\n";
    }
  }
  write_file(dir / "verify.tsv", checks.str());

  std::ostringstream sups;
  sups << "k\tu\tN_lo\tN_hi\tN_argmax\tsup\tsup_exact\tbound\twithin_bound\n";
  for (const auto& s : rep.sups)
    sups << to_string(s.k) << '\t' << s.u << '\t' << to_string(s.lo) << '\t' << to_string(s.hi) << '\t'
         << to_string(s.argmax) << '\t' << real_text(to_double(s.sup)) << '\t' << to_string(s.sup) << '\t'
         << real_text(s.bound) << '\t' << (s.within_bound ? 1 : 0) << '\n';
  write_file(dir / "perturbation.tsv", sups.str());

  if (series) {
    std::ostringstream st;
    st << "u\tterm\tpartial_sum\n";
    for (std::size_t i = 0; i < series->terms.size(); ++i)
      st << (i + 1) << '\t' << real_text(series->terms[i]) << '\t' << real_text(series->partial_sums[i]) << '\n';
    write_file(dir / "series.tsv", st.str());
  }
  std::vector<std::pair<std::string, std::string>> summary{
      {"pass", rep.pass ? "1" : "0"},
      {"checks", std::to_string(rep.checks.size())},
      {"failed", std::to_string(failed)},
      {"perturbation_monotone_decreasing", rep.monotone_decreasing ? "1" : "0"}};
  for (const auto& [u, v] : rep.sup_by_u) summary.emplace_back("sup_u" + std::to_string(u), real_text(to_double(v)));
  if (series && series->limit_estimate) summary.emplace_back("series_limit_estimate", real_text(*series->limit_estimate));
  write_file(dir / "verify_summary.tsv", tsv_kv(summary));
  out << "verify: " << rep.checks.size() - failed << "/" << rep.checks.size() << " checks pass, perturbation "
      << (rep.monotone_decreasing ? "decreasing" : "not decreasing") << " in u\n";
  return rep.pass ? kOk : kCheckFailed;
}

int cmd_certify(const Options& o, std::ostream& out, bool transfer_only) {
  const ExperimentConfig cfg = resolve_config(o);
  prepare(cfg, o);
  const ConstructionPlan plan = load_plan(o);
  const auto s = assemble_S(plan);
  const int u = certify_u(cfg, plan, o);
  const std::int64_t L = audit_radius_for(cfg, u);
  const WitnessRun wr = run_witness(*s, plan, u, L, cfg.brute_force_samples);
  const WitnessFunction& f = *wr.f;
  const fs::path dir(o.out);
  const std::string tag = "_u" + std::to_string(u);
  bool pass = true;

  if (!transfer_only) {
    const std::int64_t m = f.modulus();
    const DensityBudget budget =
        density_budget(f.periodic(), f.r(), {m, 2 * m, 4 * m, 8 * m, 16 * m, 64 * m, 256 * m},
                       static_cast<long double>(m - 1) / 2);
    const ResidueCover cover = residue_cover(u, f.H(), f.j(), f.shifts(), L, plan.d);
    std::vector<LatticePoint> xs;
    for (std::int64_t t = 0; t < m; ++t) {
      LatticePoint x(plan.d);
      x[f.j()] = t;
      xs.push_back(x);
    }
    const AverageTrace trace = divergence_trace(*s, plan, f, xs, wr.cert.threshold);
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_file(dir / ("trace" + tag + ".csv"), csv.str());

    Json pig = Json::object();
    pig["j"] = wr.pigeon.j + 1;
    Json counts = Json::object();
    for (const auto& [k, c] : wr.pigeon.counts) {
      Json row = Json::array();
      for (const auto& v : c) row.push_back(to_string(v));
      counts[to_string(k)] = row;
    }
    pig["E_kj"] = counts;
    Json sizes = Json::array();
    for (const auto& v : cover.sizes) sizes.push_back(to_string(v));
    Json cert = wr.cert.to_json();
    cert["witness"] = f.to_json();
    cert["pigeonhole"] = pig;
    cert["density_budget"] = budget.to_json();
    cert["cover"] = Json{{"L", cover.L}, {"sizes", sizes}, {"union", to_string(cover.union_size)}};
    write_json(dir / ("certificate" + tag + ".json"), cert);
    write_file(dir / ("certify" + tag + ".tsv"),
               tsv_kv({{"u", std::to_string(u)},
                       {"j", std::to_string(f.j() + 1)},
                       {"H_size", std::to_string(f.H().size())},
                       {"audit_radius", std::to_string(L)},
                       {"threshold", real_text(wr.cert.threshold)},
                       {"threshold_strong", real_text(wr.cert.threshold_strong)},
                       {"min_max_average", real_text(wr.cert.min_max_average)},
                       {"pass_fraction", to_string(wr.cert.pass_fraction)},
                       {"strong_pass_fraction", to_string(wr.cert.strong_pass_fraction)},
                       {"chain_pass", wr.cert.chain_pass ? "1" : "0"},
                       {"brute_force_agree", wr.cert.brute_force_agree ? "1" : "0"},
                       {"budget_running_max", real_text(budget.running_max)},
                       {"budget_measured_c", real_text(budget.measured_c)},
                       {"pass", wr.cert.pass ? "1" : "0"}}));
    pass = wr.cert.pass && wr.cert.chain_pass && wr.cert.brute_force_agree && budget.within_explicit;
    out << "certify u = " << u << ": pass_fraction " << to_string(wr.cert.pass_fraction) << ", min max average "
        << real_text(wr.cert.min_max_average) << " against " << real_text(wr.cert.threshold) << "\n";
    if (!wr.cert.pass)
      out << "FAIL divergence shortfall at x = " << wr.cert.worst_x.to_string() << "\n";
  }

  const TransferOutcome tr = run_transfer(cfg, o, *s, plan, u, wr);
  write_json(dir / ("transfer" + tag + ".json"), tr.json);
  write_file(dir / ("transfer" + tag + ".tsv"), tr.tsv);
  out << "transfer u = " << u << ": " << (tr.pass ? "pass" : "FAIL") << "\n";
  return pass && tr.pass ? kOk : kCheckFailed;
}

int cmd_average(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  prepare(cfg, o);
  const ConstructionPlan plan = load_plan(o);
  const auto s = assemble_S(plan);
  const int d = plan.d;
  const TorusAction action = TorusAction::standard(d);
  const std::vector<long double> x0(static_cast<std::size_t>(d), 0);
  const Orbit h = torus_orbit([](const std::vector<long double>& y) { return y[0] < 0.5L ? 1.0L : 0.0L; }, action, x0);
  const GoodnessReport good = goodness_diagnostic(*s, plan, h, 1, cfg.average_N);

  AverageTrace trace;
  trace.mode = o.exact ? "pointwise_exact" : "pointwise";
  Json exact = Json::array();
  const std::string xlabel = o.exact ? LatticePoint(d).to_string() : "torus0";
  const ExactOrbit parity = [](const LatticePoint& g) { return Rational(g[0] % 2 == 0 ? 1 : 0); };
  for (const WindowKind kind : {WindowKind::Cube, WindowKind::Ball}) {
    long double running = 0;
    for (auto N : cfg.average_N) {
      const Window w{kind, N};
      TraceRow row;
      row.index = N;
      row.window = kind;
      row.count = static_cast<std::int64_t>(window_points(*s, w).size());
      if (o.exact) {
        const Rational a = average_exact(*s, w, parity);
        row.average = to_double(a);
        exact.push_back({{"N", N}, {"window", to_string(kind)}, {"average", to_string(a)}});
      } else {
        row.average = average_over(*s, w, h);
      }
      running = std::max(running, std::fabs(row.average));
      row.maximal = running;
      row.x = xlabel;
      trace.rows.push_back(std::move(row));
    }
  }
  const fs::path dir(o.out);
  std::ostringstream csv;
  write_trace_csv(csv, trace);
  write_file(dir / "averages.csv", csv.str());
  Json j = good.to_json();
  j["action"] = {{"kind", "torus_rotation"}, {"alpha", std::vector<double>(action.alpha.begin(), action.alpha.end())}};
  j["function"] = o.exact ? "parity of g_1 (lattice shift)" : "indicator of [0, 1/2) in the first coordinate";
  if (o.exact) j["exact"] = exact;
  write_json(dir / "goodness.json", j);
  out << "average: " << good.rows.size() << " windows, " << trace.rows.size() << " trace rows\n";
  return kOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  const fs::path dir(o.out);
  std::vector<std::string> missing;
  for (const char* name : {"plan.json", "verify.json"})
    if (!fs::exists(dir / name)) missing.push_back(name);
  std::vector<fs::path> certs, transfers;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string n = e.path().filename().string();
      if (n.rfind("certificate_u", 0) == 0 && e.path().extension() == ".json") certs.push_back(e.path());
      if (n.rfind("transfer_u", 0) == 0 && e.path().extension() == ".json") transfers.push_back(e.path());
    }
  }
  std::sort(certs.begin(), certs.end());
  std::sort(transfers.begin(), transfers.end());
  if (certs.empty()) missing.push_back("certificate_u*.json");
  if (transfers.empty()) missing.push_back("transfer_u*.json");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error("missing artifacts in " + dir.string() + ": " + list);
  }
  const Json plan = read_json(dir / "plan.json");
  const Json verify = read_json(dir / "verify.json");
  const int d = plan.at("d").get<int>();
  const Exponent q = Exponent::parse(plan.at("q").get<std::string>());
  std::optional<Exponent> p;
  if (!plan.at("p").is_null()) p = Exponent::parse(plan.at("p").get<std::string>());
  const int u_max = plan.at("u_max").get<int>();

  std::ostringstream pr;
  pr << "k\tu\tN_argmax\tsup\tbound\twithin_bound\n";
  for (const auto& s : verify.at("sups"))
    pr << s.at("k").get<std::string>() << '\t' << s.at("u").get<int>() << '\t' << s.at("argmax").get<std::string>()
       << '\t' << real_text(s.at("sup_value").get<double>()) << '\t' << real_text(s.at("bound").get<double>()) << '\t'
       << (s.at("within_bound").get<bool>() ? 1 : 0) << '\n';
  write_file(dir / "report_perturbation.tsv", pr.str());

  const long double c = d * d * std::pow(3.0L, d);
  auto t1 = [&](int u) { return std::pow(static_cast<long double>(u), 1 / static_cast<long double>(q.value())) / c; };
  auto t2 = [&](int u) -> std::optional<long double> {
    if (!p || !(*p < q)) return std::nullopt;
    const long double pp = p->value(), qq = q.value();
    const long double gamma = (qq - pp) / (pp * qq);
    return std::pow(2.0L, gamma * u) / (std::pow(static_cast<long double>(u), 2 / qq) * c);
  };
  std::ostringstream th;
  th << "u\tthreshold_T1\tthreshold_T2\n";
  for (int u = 1; u <= std::max(16, u_max); ++u) {
    const auto v2 = t2(u);
    th << u << '\t' << real_text(t1(u)) << '\t' << (v2 ? real_text(*v2) : "NA") << '\n';
  }
  write_file(dir / "report_thresholds.tsv", th.str());

  std::ostringstream mx;
  mx << "u\tmin_max_average\tthreshold\tpass_fraction\tpass\n";
  bool certs_pass = true;
  for (const auto& path : certs) {
    const Json cj = read_json(path);
    mx << cj.at("u").get<int>() << '\t' << real_text(cj.at("min_max_average").get<double>()) << '\t'
       << real_text(cj.at("threshold").get<double>()) << '\t' << cj.at("pass_fraction").get<std::string>() << '\t'
       << (cj.at("pass").get<bool>() ? 1 : 0) << '\n';
    certs_pass = certs_pass && cj.at("pass").get<bool>();
  }
  write_file(dir / "report_maximal.tsv", mx.str());

  std::ostringstream orl;
  orl << "u\talpha\tM\torlicz_integral\tbudget\tK\texceedance_mass\tstatus\n";
  bool transfers_pass = true;
  for (const auto& path : transfers) {
    const Json tj = read_json(path);
    for (const auto& r : tj.at("synthesis").at("alphas")) {
      const int a = r.at("alpha").get<int>();
      orl << tj.at("u").get<int>() << '\t' << a << '\t' << real_text(r.at("M").get<double>()) << '\t'
          << real_text(r.at("orlicz_integral").get<double>()) << '\t' << real_text(std::ldexp(1.0L, -a)) << '\t'
          << real_text(r.at("K").get<double>()) << '\t' << real_text(r.at("exceedance_mass").get<double>()) << '\t'
          << r.at("status").get<std::string>() << '\n';
    }
    transfers_pass = transfers_pass && tj.at("pass").get<bool>();
  }
  write_file(dir / "report_orlicz.tsv", orl.str());

  const bool mono = verify.at("perturbation_monotone_decreasing").get<bool>();
  write_file(dir / "report.tsv", tsv_kv({{"verify_pass", verify.at("pass").get<bool>() ? "1" : "0"},
                                         {"perturbation_monotone_decreasing", mono ? "1" : "0"},
                                         {"certificates", std::to_string(certs.size())},
                                         {"certificates_pass", certs_pass ? "1" : "0"},
                                         {"transfers_pass", transfers_pass ? "1" : "0"}}));
  out << "report: wrote plot data to " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int dispatch(const Options& o, std::ostream& out, std::ostream& err) {
  try {
    if (o.command == "construct") return cmd_construct(o, out);
    if (o.command == "verify") return cmd_verify(o, out);
    if (o.command == "certify") return cmd_certify(o, out, false);
    if (o.command == "transfer") return cmd_certify(o, out, true);
    if (o.command == "average") return cmd_average(o, out);
    if (o.command == "report") return cmd_report(o, out);
    err << "error: unknown command " << o.command << "\n";
    return kBadInput;
  } catch (const CheckFailure& e) {
    err << "check failed: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const Error& e) {
    const std::string msg = e.what();
    err << "error: " << msg << "\n";
    for (const char* tag : {"shortfall", "pigeonhole failure", "cover gap", "exhausted"})
      if (msg.find(tag) != std::string::npos) return kCheckFailed;
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perturbed sparse ergodic averages: construction, verification and divergence certificates"};
  app.require_subcommand(1, 1);
  Options o;
  auto common = [&](CLI::App* sub, bool plan_input) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "run directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    sub->add_flag("--exact", o.exact, "exact rational averages");
    sub->add_option("--u", o.u, "block index u to certify");
    sub->add_option("--t", o.t, "tower radius t");
    sub->add_option("--alpha", o.alpha, "largest alpha in the g synthesis")->check(CLI::PositiveNumber);
    if (plan_input) sub->add_option("plan", o.input, "plan file (default <out>/plan.json)");
  };
  common(app.add_subcommand("construct", "choose n_k and E_k, write plan.json and set.json"), false);
  common(app.add_subcommand("verify", "recheck every condition of a plan"), true);
  common(app.add_subcommand("certify", "divergence certificate, transference and traces for one u"), true);
  common(app.add_subcommand("average", "averages over the perturbed set under a torus rotation"), true);
  common(app.add_subcommand("transfer", "Rohlin tower reports for one u"), true);
  common(app.add_subcommand("report", "plot data from a run directory"), false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o1, o2;
    const int code = app.exit(e, o1, o2);
    out << o1.str();
    err << o2.str();
    return code == 0 ? kOk : kBadInput;
  }
  o.command = app.get_subcommands().front()->get_name();
  return dispatch(o, out, err);
}

}  // namespace pertlab::app
