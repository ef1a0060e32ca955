#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nbsim/config.hpp"
#include "nbsim/scenario.hpp"
#include "nbsim/trace.hpp"

namespace {

using namespace nbsim;

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  if (path == "-") {
    for (const auto& l : lines) std::cout << l << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

struct RunOptions {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string trace_out;
  std::string sink_out;
  std::string filter;
  std::optional<std::uint16_t> split_port;
  std::string at_log;
};

int cmd_run(const RunOptions& o) {
  auto s = scenario::load_scenario(o.scenario);
  if (o.seed) s.reseed(*o.seed);
  if (o.split_port) s.split = scenario::Split{scenario::Split::Kind::loopback, *o.split_port};
  const auto tags = o.filter.empty() ? all_tags() : parse_tag_list(o.filter);

  const auto report = scenario::run_scenario(s);

  if (!o.trace_out.empty()) {
    std::vector<std::string> lines;
    for (const auto& e : filter_trace(report.trace, tags)) lines.push_back(format_event(e));
    write_lines(o.trace_out, lines);
  }
  if (!o.sink_out.empty()) {
    std::vector<std::string> lines;
    for (const auto& r : report.sink) lines.push_back(core::format_sink_record(r));
    write_lines(o.sink_out, lines);
  }
  if (!o.at_log.empty()) {
    std::vector<std::string> lines;
    for (const auto& u : report.ues) {
      for (const auto& x : u.transcript) {
        lines.push_back("[" + std::to_string(x.abs_sf) + "] ue/" + std::to_string(u.id) + " > " + x.command);
        for (const auto& r : x.responses) {
          lines.push_back("[" + std::to_string(x.abs_sf) + "] ue/" + std::to_string(u.id) + " < " + r);
        }
      }
    }
    write_lines(o.at_log, lines);
  }

  std::cerr << s.name << ": " << s.run_length << " subframes, " << report.trace.size() << " trace events, "
            << report.sink.size() << " sink records\n";
  for (const auto& a : report.assertions) {
    std::cerr << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
  }
  return report.exit_code;
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto c = config::load_enb_config(buf.str());
  std::cout << "band " << c.cell.eutra_band << ", DL " << c.cell.downlink_frequency_hz << " Hz, UL offset "
            << c.cell.uplink_frequency_offset_hz << " Hz\n"
            << "CSS Rmax " << c.css.r_max << ", period " << c.css.period() << ", offset " << c.css.offset_sf() << '\n';
  for (int ce = 0; ce < config::kNumCeLevels; ++ce) {
    const auto& r = c.rach[static_cast<std::size_t>(ce)];
    std::cout << "CE" << ce << ": window " << r.response_window << ", CR timer " << r.contention_resolution_timer
              << ", attempts " << r.max_preamble_attempts << ", NPRACH period " << r.nprach.periodicity_ms
              << " sc " << r.nprach.subcarrier_offset << "+" << r.nprach.num_subcarriers << '\n';
  }
  std::cout << "MME " << c.network.mme_ipv4 << ", eNB " << c.network.enb_s1_mme_ipv4_cidr << ", S1-U port "
            << c.network.s1u_port << "\nOK\n";
  return scenario::kExitPass;
}

/// AT lines go to the selected UE; `:run N`, `:state` and `:quit` drive the clock.
int cmd_at_console(const std::string& path, std::uint32_t ue_id) {
  auto s = scenario::load_scenario(path);
  s.split = scenario::Split{};
  for (auto& u : s.ues) {
    if (u.id == ue_id) u.script.clear();
  }
  scenario::Simulation sim(s);
  auto& ue = sim.ue(ue_id);
  std::cout << "UE " << ue_id << " ready; AT commands, :run N, :state, :quit" << std::endl;
  for (std::string line; std::cout << "> " << std::flush, std::getline(std::cin, line);) {
    if (line.empty()) continue;
    if (line == ":quit" || line == ":q") break;
    if (line == ":state") {
      const auto& st = ue.state();
      std::cout << "sf " << sim.now() << ", phase " << ue::to_string(st.phase)
                << (st.assigned_ip ? ", ip " + *st.assigned_ip : std::string()) << std::endl;
      continue;
    }
    if (line.rfind(":run", 0) == 0) {
      AbsSf n = 1000;
      if (line.size() > 5) n = std::stoull(line.substr(5));
      sim.run(n);
      std::cout << "sf " << sim.now() << ", phase " << ue::to_string(ue.state().phase) << std::endl;
      continue;
    }
    const auto before = ue.transcript().size();
    ue.queue_at(sim.now(), line);
    // Commands are accepted once the modem has booted.
    for (int guard = 0; ue.transcript().size() == before && guard < 100000; ++guard) sim.step();
    if (ue.transcript().size() == before) {
      std::cout << "(no response)" << std::endl;
      continue;
    }
    for (const auto& r : ue.transcript().back().responses) std::cout << r << std::endl;
  }
  return scenario::kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NB-IoT eNB/UE/MME protocol simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "run a scenario and evaluate its assertions");
  run_cmd->add_option("--scenario", run.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "override the scenario seed");
  run_cmd->add_option("--trace-out", run.trace_out, "write the trace here ('-' for stdout)");
  run_cmd->add_option("--sink-out", run.sink_out, "write the UDP sink dump here ('-' for stdout)");
  run_cmd->add_option("--filter", run.filter, "comma-separated trace tags to keep");
  run_cmd->add_option("--split-port", run.split_port, "run PNF and VNF as two processes over UDP loopback");
  run_cmd->add_option("--at-log", run.at_log, "write the AT transcripts here ('-' for stdout)");

  std::string config_path;
  auto* validate_cmd = app.add_subcommand("validate", "parse and check an eNB configuration file");
  validate_cmd->add_option("--config", config_path, "eNB configuration")->required();

  std::string console_scenario;
  std::uint32_t console_ue = 1;
  auto* console_cmd = app.add_subcommand("at-console", "interactive AT session with one UE of a scenario");
  console_cmd->add_option("--scenario", console_scenario, "scenario file")->required()->check(CLI::ExistingFile);
  console_cmd->add_option("--ue", console_ue, "UE id (default 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : scenario::kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*validate_cmd) return cmd_validate(config_path);
    if (*console_cmd) return cmd_at_console(console_scenario, console_ue);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return scenario::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return scenario::kExitConfig;
  }
  return scenario::kExitPass;
}
