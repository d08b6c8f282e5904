// wkam: command line front end over run_pipeline.
//
//   wkam <command> --spec problem.wkam [--out dir] [--seed n] [--from x,y] [--at x,y] [--horizon T]
//
// Exit codes: 0 all checks pass, 1 bad problem file or arguments, 2 numerical
// failure, 3 a check failed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "wkam/errors.hpp"
#include "wkam/pipeline.hpp"

namespace {

std::optional<wkam::Vec2> parse_point(const std::string& s, const char* flag) {
  if (s.empty()) return std::nullopt;
  const auto comma = s.find(',');
  try {
    std::size_t used = 0;
    const double x = std::stod(s.substr(0, comma), &used);
    double y = 0.0;
    if (comma != std::string::npos) y = std::stod(s.substr(comma + 1));
    if (std::isfinite(x) && std::isfinite(y)) return wkam::Vec2{x, y};
  } catch (const std::exception&) {
  }
  wkam::fail(wkam::ErrorCode::SpecError, std::string(flag) + " expects x,y");
}

const std::map<std::string, std::string> kDescriptions{
    {"solve-cauchy", "evolve u0 by the Lax-Oleinik semigroup over [0, T]"},
    {"critical-value", "critical value from cycle means, cross-checked by long-time slope"},
    {"distance", "Mane potential d(., y) and d(x, .) for the point --from"},
    {"aubry", "Aubry set of the discrete problem"},
    {"weak-kam-solve", "weak KAM solution from a trace on the Aubry set"},
    {"extremal", "calibrated curve from --from up to --horizon"},
    {"aubry-orbit", "two-sided extremal through the Aubry point --at"},
    {"skorokhod", "reflected path for the run.x0 / run.v input"},
    {"verify", "run every stage and report all checks"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak KAM solver for Hamilton-Jacobi equations with oblique boundary conditions"};
  app.require_subcommand(1, 1);
  std::string spec_path, out_dir, from, at;
  std::optional<long long> seed;
  std::optional<double> horizon;
  bool quiet = false;
  for (const std::string& cmd : wkam::pipeline_commands()) {
    const auto d = kDescriptions.find(cmd);
    CLI::App* sub = app.add_subcommand(cmd, d == kDescriptions.end() ? "" : d->second);
    sub->add_option("--spec", spec_path, "problem file (key = value blocks or JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "random seed (overrides run.seed)");
    sub->add_flag("--quiet", quiet, "suppress the check table");
    if (cmd == "distance" || cmd == "extremal") sub->add_option("--from", from, "point x,y");
    if (cmd == "aubry-orbit") sub->add_option("--at", at, "point x,y");
    if (cmd == "extremal" || cmd == "aubry-orbit") sub->add_option("--horizon", horizon, "time horizon");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    wkam::RunRequest req;
    req.command = app.get_subcommands().front()->get_name();
    std::ifstream in(spec_path, std::ios::binary);
    if (!in) wkam::fail(wkam::ErrorCode::SpecError, "cannot read " + spec_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    wkam::ProblemSpec spec = wkam::parse_spec(buf.str());
    if (seed) spec.set("run", "seed", std::to_string(*seed));
    req.from = parse_point(from, "--from");
    req.at = parse_point(at, "--at");
    if (horizon && !(*horizon > 0.0)) wkam::fail(wkam::ErrorCode::SpecError, "--horizon must be positive");
    req.horizon = horizon;
    if (!out_dir.empty()) req.out_dir = out_dir;

    const wkam::RunSummary s = wkam::run_pipeline(spec, req);
    if (!quiet) {
      for (const wkam::CheckResult& c : s.checks)
        std::printf("%-4s %-34s value=%-14.6g limit=%.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                    c.limit);
      for (const std::string& f : s.files) std::printf("wrote %s\n", f.c_str());
    }
    if (s.exit_code == 3) std::fprintf(stderr, "wkam: %s: a check failed\n", req.command.c_str());
    return s.exit_code;
  } catch (const wkam::Error& e) {
    std::fprintf(stderr, "wkam: %s\n", e.what());
    const bool user = e.code() == wkam::ErrorCode::SpecError || e.code() == wkam::ErrorCode::InvalidArgument;
    return user ? 1 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wkam: %s\n", e.what());
    return 2;
  }
}
