// wikialumni: command line front end for the alumni pipeline.
//
//   wikialumni ingest  --config run.json
//   wikialumni extract --config run.json
//   wikialumni views   --config run.json [--mode fixture|live] [--year N]
//   wikialumni report  --config run.json [--method spearman|pearson_on_scores]
//   wikialumni audit   --config run.json [--rate 0.05] [--seed 1]
//
// Exit codes: 0 success, 1 partial failure, 2 configuration error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wikialumni/errors.hpp"
#include "wikialumni/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::string output_dir;
  std::string cache_dir;
  std::optional<int> year;
  std::string mode;
  std::optional<double> rate_limit;
  std::string method;
  std::optional<double> audit_rate;
  std::optional<std::uint64_t> audit_seed;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "Run configuration (JSON)")->required();
  cmd->add_option("-o,--output-dir", f.output_dir, "Override the output directory");
  cmd->add_option("--cache-dir", f.cache_dir, "Override the pageview cache directory");
  cmd->add_option("--year", f.year, "Override the analysis year");
  cmd->add_option("--mode", f.mode, "Pageview source: live or fixture");
  cmd->add_option("--rate-limit", f.rate_limit, "Live API requests per second");
  cmd->add_option("--method", f.method,
                  "Correlation method: spearman or pearson_on_scores");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wikialumni;

  CLI::App app{"Rank universities by the Wikipedia popularity of their alumni"};
  app.require_subcommand(1);
  Flags flags;

  struct Sub {
    const char* name;
    const char* help;
    Command command;
  };
  const Sub subs[] = {
      {"ingest", "Stream dumps into person pages and redirect maps", Command::kIngest},
      {"extract", "Link persons to universities", Command::kExtract},
      {"views", "Attach pageview totals", Command::kViews},
      {"report", "Statistics, rankings and correlations", Command::kReport},
      {"audit", "Draw a random sample for manual review", Command::kAudit},
  };
  std::optional<Command> chosen;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, flags);
    if (s.command == Command::kAudit) {
      cmd->add_option("--rate", flags.audit_rate, "Sampling rate in (0, 1]");
      cmd->add_option("--seed", flags.audit_seed, "Sampling seed");
    }
    const Command c = s.command;
    cmd->callback([&chosen, c] { chosen = c; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  PipelineConfig config;
  try {
    config = PipelineConfig::load(flags.config);
    apply_env_overrides(config);
    ConfigOverrides o;
    if (!flags.output_dir.empty()) o.output_dir = flags.output_dir;
    if (!flags.cache_dir.empty()) o.cache_dir = flags.cache_dir;
    o.analysis_year = flags.year;
    if (!flags.mode.empty()) o.mode = parse_pageview_mode(flags.mode);
    o.rate_limit = flags.rate_limit;
    if (!flags.method.empty()) {
      o.correlation_method = parse_correlation_method(flags.method);
    }
    apply_overrides(config, o);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  RunContext ctx;
  ctx.log = &std::cerr;
  ctx.audit_rate = flags.audit_rate;
  ctx.audit_seed = flags.audit_seed;
  return run_command(*chosen, config, ctx);
}
