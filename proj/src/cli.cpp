#include "phrev/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "phrev/collective.hpp"
#include "phrev/datagen.hpp"
#include "phrev/harp.hpp"
#include "phrev/report.hpp"
#include "phrev/separability.hpp"

namespace phrev::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

int exit_for(Status s) {
  switch (s) {
    case Status::kFeasible: return kExitFeasible;
    case Status::kInfeasible: return kExitInfeasible;
    case Status::kUndecided: return kExitUndecided;
  }
  return kExitUndecided;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions o;
  o.eps = c.eps;
  o.max_iter = c.max_iter;
  o.seed = c.seed;
  return o;
}

Vector random_exponents(Rng& rng, std::size_t n) {
  Vector a(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(0.5, 1.5);
  a /= a.sum();
  // Absorb rounding so the sum is 1 to machine precision.
  a[a.size() - 1] = 1.0 - (a.sum() - a[a.size() - 1]);
  return a;
}

struct Outcome {
  Json body;
  int code = kExitUndecided;
  std::size_t iterations = 0;
};

Outcome run_gen(const RunConfig& c) {
  if (c.output.empty()) throw UsageError("gen requires --output for the CSV");
  if (c.periods == 0 || c.goods == 0) throw UsageError("--periods and --goods must be positive");
  Rng rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  Outcome o;
  std::optional<AllocationSolution> witness;
  MarketStatistics stats = [&]() -> MarketStatistics {
    if (c.kind == "cobb-douglas") {
      CobbDouglasSpec spec;
      spec.exponents = random_exponents(rng, c.goods);
      spec.seed = c.seed;
      return gen_cobb_douglas(spec, c.periods);
    }
    if (c.kind == "nested") {
      if (c.goods < 2) throw UsageError("nested data needs --goods >= 2");
      CobbDouglasSpec q, y;
      const std::size_t l = c.goods / 2;
      q.exponents = random_exponents(rng, c.goods - l);
      y.exponents = random_exponents(rng, l);
      const double a = rng.uniform(0.3, 0.7);
      return gen_nested_cd(q, y, {a, 1.0 - a}, c.periods, c.seed).base();
    }
    if (c.kind == "collective") {
      if (c.consumers == 0) throw UsageError("--consumers must be positive");
      std::vector<CobbDouglasSpec> specs(c.consumers);
      for (CobbDouglasSpec& s : specs) {
        s.exponents = random_exponents(rng, c.goods);
        s.budget_lo = 0.5;
        s.budget_hi = 2.0;
      }
      CollectiveSample sample = gen_collective(specs, c.periods, c.seed);
      witness = std::move(sample.witness);
      return std::move(sample.aggregate);
    }
    throw UsageError("unknown --kind '" + c.kind + "'");
  }();
  if (c.noise > 0.0) stats = perturb(stats, c.noise, c.seed + 1);

  const std::string csv = format_statistics(stats);
  write_text(c.output, csv);
  o.body = Json{{"status", "GENERATED"},
                {"kind", c.kind},
                {"periods", stats.periods()},
                {"goods", stats.goods()},
                {"output_digest", "sha256:" + sha256_hex(csv)}};
  if (c.kind == "nested") {
    Json ycols = Json::array();
    for (std::size_t j = c.goods - c.goods / 2; j < c.goods; ++j) ycols.push_back(j + 1);
    o.body["y_cols"] = ycols;
  }
  if (witness) {
    o.body["witness"] = allocation_json(*witness);
    if (!c.witness_output.empty()) {
      write_text(c.witness_output, allocation_json(*witness).dump(2) + "\n");
    }
  }
  o.code = kExitFeasible;
  return o;
}

Outcome analyse(const RunConfig& c, const MarketStatistics& stats) {
  Outcome o;
  if (c.command == "harp") {
    const HarpResult r = check_harp(stats, c.harp_tol);
    o.body = harp_body(r);
    o.code = exit_for(r.decision.status);
  } else if (c.command == "separability") {
    if (c.y_cols.empty()) throw UsageError("separability requires --y-cols");
    std::vector<std::size_t> y;
    for (std::size_t col : c.y_cols) {
      if (col == 0 || col > stats.goods()) {
        throw UsageError("--y-cols entry " + std::to_string(col) + " is outside 1.." +
                         std::to_string(stats.goods()));
      }
      y.push_back(col - 1);
    }
    const PartitionedStatistics part = partition(stats, y);
    const SeparabilityResult r =
        check_separability(part, {c.tol_accept, c.tol_reject}, solve_options(c));
    o.body = separability_body(r);
    Json ycols = Json::array();
    for (std::size_t j : part.y_block()) ycols.push_back(j + 1);
    o.body["y_cols"] = ycols;
    o.code = exit_for(r.decision.status);
    o.iterations = r.iterations;
  } else if (c.command == "collective") {
    if (c.k == 0) throw UsageError("--k must be positive");
    const CollectiveResult r =
        check_collective(stats, c.k, {c.tol_accept, c.tol_reject}, solve_options(c));
    o.body = collective_body(r, c.k);
    o.code = exit_for(r.decision.status);
    o.iterations = r.iterations;
  } else if (c.command == "class-number") {
    const ClassNumberResult r =
        class_number(stats, c.k_max, {c.tol_accept, c.tol_reject}, solve_options(c));
    o.body = class_number_body(r);
    o.code = r.outcome == ClassNumberOutcome::kFound       ? kExitFeasible
             : r.outcome == ClassNumberOutcome::kNotFound ? kExitNotFound
                                                          : kExitUndecided;
    o.iterations = r.iterations;
  } else {
    throw UsageError("unknown command '" + c.command + "'");
  }
  return o;
}

Json parameters_json(const RunConfig& c) {
  Json p{{"harp_tol", c.harp_tol},
         {"tol_accept", c.tol_accept},
         {"tol_reject", c.tol_reject},
         {"eps", c.eps},
         {"max_iter", c.max_iter},
         {"seed", c.seed}};
  if (c.command == "collective") p["k"] = c.k;
  if (c.command == "class-number") p["k_max"] = c.k_max;
  if (c.command == "gen") {
    p["kind"] = c.kind;
    p["periods"] = c.periods;
    p["goods"] = c.goods;
    p["consumers"] = c.consumers;
    p["noise"] = c.noise;
  }
  return p;
}

int error_exit(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kEmptyBlock:
    case ErrorCode::kInvalidArgument:
      return kExitUsage;
    default:
      return kExitIo;
  }
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  try {
    Json report{{"schema_version", kReportSchemaVersion}, {"command", config.command}};
    Outcome o;
    if (config.command == "gen") {
      o = run_gen(config);
    } else {
      if (config.input.empty()) throw UsageError(config.command + " requires --input");
      const std::string text = read_file(config.input);
      const MarketStatistics stats = parse_statistics(text);
      report["input_digest"] = "sha256:" + sha256_hex(text);
      report["periods"] = stats.periods();
      report["goods"] = stats.goods();
      o = analyse(config, stats);
    }
    report["parameters"] = parameters_json(config);
    for (auto it = o.body.begin(); it != o.body.end(); ++it) report[it.key()] = it.value();
    Json timings{{"iterations", o.iterations}};
    if (config.wall_clock) {
      timings["wall_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    report["timings"] = timings;

    const std::string text = report.dump(2) + "\n";
    if (config.command != "gen" && !config.output.empty()) {
      write_text(config.output, text);
    } else {
      out << text;
    }
    return o.code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (e.row()) err << " (row " << *e.row();
    if (e.row() && e.column()) err << ", column " << *e.column();
    if (e.row()) err << ")";
    err << "\n";
    return error_exit(e);
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Positive-homogeneity revealed-preference tests"};
  app.require_subcommand(1);
  RunConfig c;
  std::string format = "json";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", c.input, "CSV with header p1..pn,q1..qn")->required();
    sub->add_option("--output", c.output, "JSON report path (default: stdout)");
    sub->add_option("--eps", c.eps, "solver feasibility tolerance")->capture_default_str();
    sub->add_option("--max-iter", c.max_iter, "solver iteration budget")->capture_default_str();
    sub->add_option("--seed", c.seed, "seed for solver restarts")->capture_default_str();
    sub->add_flag("--wall-clock", c.wall_clock, "add wall-clock seconds to the report");
    sub->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"json"}))
        ->capture_default_str();
  };
  auto add_band = [&](CLI::App* sub) {
    sub->add_option("--tol-accept", c.tol_accept, "solver objective at or below this accepts")
        ->capture_default_str();
    sub->add_option("--tol-reject", c.tol_reject, "solver objective at or above this rejects")
        ->capture_default_str();
  };

  CLI::App* harp = app.add_subcommand("harp", "homogeneous Afriat test");
  add_common(harp);
  harp->add_option("--tol", c.harp_tol, "cycle tolerance in (0, 1e-2]")->capture_default_str();

  CLI::App* sep = app.add_subcommand("separability", "complete PH-separability test");
  add_common(sep);
  add_band(sep);
  sep->add_option("--y-cols", c.y_cols, "1-based y-block columns, comma separated")
      ->required()
      ->delimiter(',');

  CLI::App* coll = app.add_subcommand("collective", "k-consumer rationalizability");
  add_common(coll);
  add_band(coll);
  coll->add_option("--k", c.k, "number of consumers")->capture_default_str();

  CLI::App* cn = app.add_subcommand("class-number", "smallest accepted number of consumers");
  add_common(cn);
  add_band(cn);
  cn->add_option("--k-max", c.k_max, "largest k tried (default: number of goods, a heuristic)");

  CLI::App* gen = app.add_subcommand("gen", "write synthetic statistics");
  gen->add_option("--kind", c.kind, "cobb-douglas, nested or collective")->capture_default_str();
  gen->add_option("--periods", c.periods)->capture_default_str();
  gen->add_option("--goods", c.goods)->capture_default_str();
  gen->add_option("--consumers", c.consumers)->capture_default_str();
  gen->add_option("--noise", c.noise, "relative quantity noise in [0, 0.5)")->capture_default_str();
  gen->add_option("--seed", c.seed)->capture_default_str();
  gen->add_option("--output", c.output, "CSV path")->required();
  gen->add_option("--witness", c.witness_output, "JSON path for the generating split");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  for (CLI::App* sub : app.get_subcommands()) c.command = sub->get_name();
  const int code = run(c, out, err);
  if (code == kExitUsage) err << app.help();
  return code;
}

}  // namespace phrev::cli
