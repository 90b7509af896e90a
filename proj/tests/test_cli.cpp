#include "doctest.h"

#include "app.hpp"
#include "pertlab/construction.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace pertlab;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pertlab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pertlab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "input.json";
  std::ofstream(p) << body;
  return p;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

std::vector<std::vector<std::string>> tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const char* kSmall = R"({"regime": "T1", "d": 2, "q": 2, "u_min": 2, "u_max": 3,
  "base": {"kind": "rule", "rule_name": "cubic_ray"}, "certify": {"u": 3}})";

void pipeline(const fs::path& cfg, const fs::path& out, const std::string& threads) {
  for (const char* cmd : {"construct", "verify", "certify", "average", "report"}) {
    const auto r = cli({cmd, "--config", cfg.string(), "--out", out.string(), "--threads", threads});
    REQUIRE_MESSAGE(r.code == 0, cmd, ": ", r.err);
  }
}

}  // namespace

TEST_CASE("pipeline artifacts are byte-identical across runs and thread counts") {
  const fs::path base = scratch("determinism");
  const fs::path cfg = write_config(base, kSmall);
  pipeline(cfg, base / "a", "1");
  pipeline(cfg, base / "b", "1");
  pipeline(cfg, base / "c", "4");
  const auto a = tree(base / "a");
  CHECK(a.size() >= 15);
  CHECK(a == tree(base / "b"));
  CHECK(a == tree(base / "c"));

  // artifacts reload to equal values
  const auto plan = ConstructionPlan::from_json(Json::parse(a.at("plan.json")));
  CHECK(plan.to_json().dump(2) + "\n" == a.at("plan.json"));

  // numeric TSV cells use '.' decimals, never ','; only verify.tsv has a free-text column
  for (const auto& [name, text] : a) {
    if (name.size() < 4 || name.substr(name.size() - 4) != ".tsv") continue;
    if (name != "verify.tsv") {
      CHECK(text.find(',') == std::string::npos);
      continue;
    }
    for (const auto& row : tsv(base / "a" / name))
      for (std::size_t i = 0; i < 3 && i < row.size(); ++i) CHECK(row[i].find(',') == std::string::npos);
  }

  // one row per k ∈ A_u and audited x
  const auto rows = tsv(base / "a" / "trace_u3.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0][0] == "k_or_N");
  std::set<std::string> ks, xs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 8);
    ks.insert(rows[i][0]);
    xs.insert(rows[i][7]);
  }
  CHECK(ks.size() == 8);
  CHECK(rows.size() - 1 == ks.size() * xs.size());
  CHECK(xs.size() == 8);
}

TEST_CASE("config validation happens before any work") {
  const fs::path base = scratch("validation");
  auto reject = [&](const std::string& body) {
    const fs::path cfg = write_config(base, body);
    const auto r = cli({"construct", "--config", cfg.string(), "--out", (base / "run").string()});
    CHECK(r.code == app::kBadInput);
    CHECK_FALSE(fs::exists(base / "run" / "plan.json"));
    return r.err;
  };
  CHECK(reject(R"({"regime": "T1", "q": 2, "p": 2})").find("p > q") != std::string::npos);
  CHECK(reject(R"({"regime": "T1", "q": 2, "p": "3/2"})").find("p > q") != std::string::npos);
  CHECK(reject(R"({"regime": "T2", "q": 2, "p": 2})").find("1 <= p < q") != std::string::npos);
  CHECK(reject(R"({"regime": "T2", "q": 1, "p": 1})").find("q > 1") != std::string::npos);
  reject(R"({"d": 0})");
  reject(R"({"u_min": 3, "u_max": 2})");
  reject(R"({"q": "2/x"})");
  reject(R"({"transfer": {"epsilon": "3/2"}})");
  reject(R"([1, 2])");
  reject("{not json");
  CHECK(cli({"construct", "--out", (base / "none").string()}).code == app::kBadInput);
  CHECK(cli({"construct", "--threads", "0"}).code == app::kBadInput);
  CHECK(cli({"frobnicate"}).code == app::kBadInput);
  CHECK(cli({}).code == app::kBadInput);
  CHECK(cli({"--help"}).code == app::kOk);
}

TEST_CASE("report needs the run artifacts") {
  const fs::path dir = scratch("empty");
  const auto r = cli({"report", "--out", dir.string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("missing artifacts") != std::string::npos);
  CHECK(r.err.find("plan.json") != std::string::npos);
  CHECK(r.err.find("certificate_u*.json") != std::string::npos);
}

TEST_CASE("reference T1 run: verify, faults and report") {
  const fs::path base = scratch("reference");
  const fs::path cfg = write_config(base, R"({"regime": "T1", "d": 2, "q": 1, "u_min": 2, "u_max": 4,
    "base": {"kind": "rule", "rule_name": "cubic_ray"}, "certify": {"u": 3}})");
  const fs::path run = base / "run";
  REQUIRE(cli({"construct", "--config", cfg.string(), "--out", run.string()}).code == 0);
  const auto v = cli({"verify", "--out", run.string()});
  REQUIRE(v.code == 0);
  CHECK(v.out.find("decreasing in u") != std::string::npos);
  std::map<std::string, std::string> summary;
  for (const auto& row : tsv(run / "verify_summary.tsv")) summary[row.at(0)] = row.at(1);
  CHECK(summary.at("pass") == "1");
  CHECK(summary.at("failed") == "0");
  CHECK(summary.at("perturbation_monotone_decreasing") == "1");

  for (const auto& row : tsv(run / "verify.tsv"))
    if (row[0] != "check") CHECK(row[2] == "1");

  // fault injection through the positional plan argument
  const Json plan = Json::parse(slurp(run / "plan.json"));
  auto faulty = [&](const std::function<void(Json&)>& edit, const std::string& check) {
    Json j = plan;
    edit(j);
    const fs::path p = base / "faulty.json";
    std::ofstream(p) << j.dump();
    const auto r = cli({"verify", p.string(), "--out", (base / "faulty_out").string(), "--config", cfg.string()});
    CHECK(r.code == app::kCheckFailed);
    CHECK_MESSAGE(r.out.find("FAIL " + check) != std::string::npos, r.out);
    return r.out;
  };
  faulty(
      [](Json& j) {
        auto& rec = j.at("records").at(3);
        rec.at("n_k") = to_string(2 * parse_bigint(j.at("records").at(2).at("n_k").get<std::string>()));
      },
      "overlap");
  faulty(
      [](Json& j) {
        auto& rec = j.at("records").at(5);
        rec.at("quota") = to_string(parse_bigint(rec.at("quota").get<std::string>()) + 1);
      },
      "quota");

  REQUIRE(cli({"certify", "--out", run.string()}).code == 0);
  const auto rep = cli({"report", "--out", run.string()});
  REQUIRE(rep.code == 0);
  std::map<std::string, std::string> r;
  for (const auto& row : tsv(run / "report.tsv")) r[row.at(0)] = row.at(1);
  CHECK(r.at("perturbation_monotone_decreasing") == "1");
  CHECK(r.at("certificates_pass") == "1");
  CHECK(r.at("transfers_pass") == "1");
  CHECK(tsv(run / "report_orlicz.tsv").size() == 6);
}

TEST_CASE("threshold curve carries the 1/18 row at u = 4, q = 2, d = 2") {
  const fs::path base = scratch("thresholds");
  const fs::path cfg = write_config(base, R"({"regime": "T2", "d": 2, "q": 2, "p": 1, "u_min": 2, "u_max": 4,
    "base": {"kind": "rule", "rule_name": "cubic_ray"}, "certify": {"u": 4}})");
  const fs::path run = base / "run";
  for (const char* cmd : {"construct", "verify", "certify", "report"})
    REQUIRE(cli({cmd, "--config", cfg.string(), "--out", run.string()}).code == 0);
  const auto rows = tsv(run / "report_thresholds.tsv");
  REQUIRE(rows.size() > 4);
  CHECK(rows[0] == std::vector<std::string>{"u", "threshold_T1", "threshold_T2"});
  CHECK(rows[4][0] == "4");
  CHECK(std::stold(rows[4][1]) == doctest::Approx(1.0 / 18).epsilon(1e-14));
  CHECK(std::stold(rows[4][2]) == doctest::Approx(1.0 / 36).epsilon(1e-14));
}

TEST_CASE("T1 d = 1 reference certificate") {
  const fs::path base = scratch("d1");
  const fs::path cfg = write_config(base, R"({"regime": "T1", "d": 1, "q": 1, "p": 2, "u_min": 2, "u_max": 3,
    "base": {"kind": "rule", "rule_name": "cubic_ray"}, "certify": {"u": 3}})");
  const fs::path run = base / "run";
  REQUIRE(cli({"construct", "--config", cfg.string(), "--out", run.string()}).code == 0);
  const auto c = cli({"certify", "--out", run.string()});
  REQUIRE(c.code == 0);
  std::map<std::string, std::string> r;
  for (const auto& row : tsv(run / "certify_u3.tsv")) r[row.at(0)] = row.at(1);
  CHECK(r.at("pass_fraction") == "1");
  CHECK(r.at("pass") == "1");
  CHECK(cli({"certify", "--out", run.string(), "--u", "5"}).code == app::kBadInput);
}

TEST_CASE("average command writes both window kinds") {
  const fs::path base = scratch("average");
  const fs::path cfg = write_config(base, kSmall);
  const fs::path run = base / "run";
  REQUIRE(cli({"construct", "--config", cfg.string(), "--out", run.string()}).code == 0);
  REQUIRE(cli({"average", "--out", run.string(), "--exact"}).code == 0);
  const auto rows = tsv(run / "averages.csv");
  CHECK(rows.size() == 7);
  CHECK(rows[1][1] == "cube");
  CHECK(rows[4][1] == "ball");
  const Json g = Json::parse(slurp(run / "goodness.json"));
  CHECK(g.at("exact").size() == 6);
}

TEST_CASE("standalone binary exit status") {
  const fs::path dir = scratch("binary");
  const std::string cmd = std::string(PERTLAB_CLI_PATH) + " report --out " + dir.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(status != 0);
}
