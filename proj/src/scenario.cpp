#include "nbsim/scenario.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "nbsim/fapi.hpp"
#include "nbsim/link.hpp"
#include "nbsim/s1ap.hpp"

namespace nbsim::scenario {

namespace {

using namespace std::chrono_literals;

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> split_csv(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto comma = s.find(',', pos);
    out.emplace_back(trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) { throw ConfigError(msg, line, 1); }

template <typename T>
T parse_number(std::string_view v, std::size_t line, const std::string& what) {
  T out{};
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size() || v.empty()) {
    fail(line, what + ": '" + std::string(v) + "' is not a valid number");
  }
  return out;
}

bool parse_bool(std::string_view v, std::size_t line, const std::string& what) {
  const auto l = lower(v);
  if (l == "true" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "no" || l == "0") return false;
  fail(line, what + ": expected true or false, got '" + std::string(v) + "'");
}

nas::Key parse_key(std::string_view v, std::size_t line) {
  auto bytes = from_hex(v);
  if (!bytes || bytes->size() != 16) fail(line, "K must be 32 hex digits");
  nas::Key k{};
  std::copy(bytes->begin(), bytes->end(), k.begin());
  return k;
}

const std::map<std::string, std::size_t>& check_arity() {
  // minimum argument count per check
  static const std::map<std::string, std::size_t> kChecks{
      {"sink_count", 1},    {"sink_record", 3},    {"sink_absent", 1},  {"s1ap_sequence", 0},
      {"ue_attached", 1},   {"ue_phase", 2},       {"trace_count", 3},  {"at_response", 3},
      {"ue_stat", 4},
  };
  return kChecks;
}

std::optional<std::function<bool(long long, long long)>> comparison(std::string_view op) {
  if (op == "==") return std::equal_to<long long>{};
  if (op == "!=") return std::not_equal_to<long long>{};
  if (op == ">=") return std::greater_equal<long long>{};
  if (op == "<=") return std::less_equal<long long>{};
  if (op == ">") return std::greater<long long>{};
  if (op == "<") return std::less<long long>{};
  return std::nullopt;
}

void validate_assertion(const Assertion& a) {
  auto it = check_arity().find(a.check);
  if (it == check_arity().end()) fail(a.line, "unknown check '" + a.check + "'");
  if (a.args.size() < it->second) {
    fail(a.line, "check '" + a.check + "' needs at least " + std::to_string(it->second) + " arguments");
  }
  auto need_op = [&](std::size_t i) {
    if (!comparison(a.args[i])) fail(a.line, "'" + a.args[i] + "' is not a comparison operator");
  };
  if (a.check == "sink_count" && a.args.size() == 2) need_op(0);
  if (a.check == "trace_count") {
    if (!parse_tag(a.args[0])) fail(a.line, "unknown trace tag '" + a.args[0] + "'");
    need_op(1);
  }
  if (a.check == "ue_stat") need_op(2);
}

}  // namespace

void Scenario::reseed(std::uint64_t s) {
  seed = s;
  if (!phy_seed_explicit) phy.rng_seed = s;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  Scenario s;
  std::string section;
  UeScript* current_ue = nullptr;
  std::size_t line_no = 0;
  std::size_t enb_line = 0;
  bool have_config = false, have_run_length = false;
  std::vector<std::size_t> ue_lines;

  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      const auto head = words(line.substr(1, line.size() - 2));
      if (head.empty()) fail(line_no, "empty section header");
      section = lower(head[0]);
      current_ue = nullptr;
      if (section == "ue") {
        if (head.size() != 2) fail(line_no, "expected [ue <id>]");
        UeScript u;
        u.id = parse_number<std::uint32_t>(head[1], line_no, "UE id");
        for (const auto& other : s.ues) {
          if (other.id == u.id) fail(line_no, "duplicate UE id " + head[1]);
        }
        s.ues.push_back(std::move(u));
        ue_lines.push_back(line_no);
        current_ue = &s.ues.back();
      } else if (head.size() != 1 || (section != "enb" && section != "subscribers" && section != "phy" &&
                                      section != "assert")) {
        fail(line_no, "unknown section [" + std::string(line.substr(1, line.size() - 2)) + "]");
      }
      continue;
    }
    if (section.empty()) fail(line_no, "setting outside of any section");

    if (section == "subscribers") {
      const auto w = words(line);
      if (w.size() < 2 || w.size() > 3) fail(line_no, "expected: IMSI K [ce=N]");
      SubscriberEntry e;
      e.imsi = w[0];
      if (!nas::valid_imsi(e.imsi)) fail(line_no, "invalid IMSI '" + e.imsi + "'");
      e.k = parse_key(w[1], line_no);
      if (w.size() == 3) {
        if (w[2].rfind("ce=", 0) != 0) fail(line_no, "expected ce=N, got '" + w[2] + "'");
        e.ce_level = parse_number<int>(std::string_view(w[2]).substr(3), line_no, "ce");
        if (e.ce_level < 0 || e.ce_level >= config::kNumCeLevels) fail(line_no, "ce must be 0..2");
      }
      for (const auto& other : s.subscribers) {
        if (other.imsi == e.imsi) fail(line_no, "duplicate subscriber " + e.imsi);
      }
      s.subscribers.push_back(e);
      continue;
    }

    if (section == "ue" && (line.front() == '@' || lower(line.substr(0, 2)) == "at")) {
      AtLine at;
      auto cmd = line;
      if (cmd.front() == '@') {
        const auto sp = cmd.find_first_of(" \t");
        if (sp == std::string_view::npos) fail(line_no, "'@time' must be followed by an AT command");
        at.not_before = parse_number<AbsSf>(cmd.substr(1, sp - 1), line_no, "AT time");
        cmd = trim(cmd.substr(sp));
      }
      at.command = std::string(cmd);
      current_ue->script.push_back(std::move(at));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));

    if (section == "assert") {
      Assertion a;
      a.name = key;
      a.line = line_no;
      auto w = words(value);
      if (w.empty()) fail(line_no, "assertion '" + key + "' has no check");
      a.check = w[0];
      a.args.assign(w.begin() + 1, w.end());
      validate_assertion(a);
      for (const auto& other : s.assertions) {
        if (other.name == a.name) fail(line_no, "duplicate assertion name '" + a.name + "'");
      }
      s.assertions.push_back(std::move(a));
    } else if (section == "enb") {
      if (key == "config") {
        s.enb_config_path = base_dir / value;
        have_config = true;
        enb_line = line_no;
      } else if (key == "split") {
        if (value == "monolithic") {
          s.split = Split{};
        } else if (value.rfind("loopback:", 0) == 0) {
          const auto port = parse_number<unsigned>(std::string_view(value).substr(9), line_no, "split port");
          if (port == 0 || port > 65534) fail(line_no, "split port must be in 1..65534");
          s.split = Split{Split::Kind::loopback, static_cast<std::uint16_t>(port)};
        } else {
          fail(line_no, "split must be 'monolithic' or 'loopback:PORT'");
        }
      } else if (key == "run_length") {
        s.run_length = parse_number<AbsSf>(value, line_no, "run_length");
        have_run_length = true;
      } else if (key == "seed") {
        s.seed = parse_number<std::uint64_t>(value, line_no, "seed");
      } else if (key == "identity_request") {
        s.identity_request = parse_bool(value, line_no, key);
      } else if (key == "name") {
        s.name = value;
      } else {
        fail(line_no, "unknown [enb] key '" + key + "'");
      }
    } else if (section == "ue") {
      if (key == "imsi") {
        current_ue->imsi = value;
      } else if (key == "sim_k") {
        current_ue->sim_k = parse_key(value, line_no);
      } else if (key == "band") {
        current_ue->band = parse_number<int>(value, line_no, "band");
      } else {
        fail(line_no, "unknown [ue] key '" + key + "'");
      }
    } else if (section == "phy") {
      auto per_ce = [&](auto parse) {
        const auto parts = split_csv(value);
        if (parts.size() != 1 && parts.size() != config::kNumCeLevels) {
          fail(line_no, key + " takes one value or one per CE level");
        }
        std::array<decltype(parse(parts[0])), config::kNumCeLevels> out{};
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = parse(parts[parts.size() == 1 ? 0 : i]);
        return out;
      };
      if (key == "seed") {
        s.phy.rng_seed = parse_number<std::uint64_t>(value, line_no, "phy seed");
        s.phy_seed_explicit = true;
      } else if (key == "loss") {
        s.phy.loss_prob = per_ce([&](const std::string& v) {
          try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
          } catch (const std::logic_error&) {
            fail(line_no, "loss: '" + v + "' is not a number");
          }
        });
      } else if (key == "required_reps") {
        s.phy.required_reps = per_ce([&](const std::string& v) { return parse_number<int>(v, line_no, key); });
      } else if (key == "crc_bug") {
        s.phy.crc_bug_enabled = parse_bool(value, line_no, key);
      } else if (key == "crc_recovery") {
        s.phy.crc_recovery_enabled = parse_bool(value, line_no, key);
      } else if (key == "preamble_outcomes") {
        s.phy.preamble_script.clear();
        for (const auto& o : split_csv(value)) {
          if (o == "hit") s.phy.preamble_script.push_back(true);
          else if (o == "miss") s.phy.preamble_script.push_back(false);
          else fail(line_no, "preamble outcome must be 'hit' or 'miss', got '" + o + "'");
        }
      } else {
        fail(line_no, "unknown [phy] key '" + key + "'");
      }
    }
  }

  if (!have_config) fail(line_no, "[enb] config is required");
  if (!have_run_length || s.run_length == 0) fail(line_no, "[enb] run_length must be > 0");
  for (std::size_t i = 0; i < s.ues.size(); ++i) {
    const auto& u = s.ues[i];
    if (u.imsi.empty()) fail(ue_lines[i], "UE " + std::to_string(u.id) + " has no imsi");
    auto sub = std::find_if(s.subscribers.begin(), s.subscribers.end(),
                            [&](const SubscriberEntry& e) { return e.imsi == u.imsi; });
    if (sub == s.subscribers.end()) {
      fail(ue_lines[i], "UE " + std::to_string(u.id) + " has no subscriber entry for IMSI " + u.imsi);
    }
  }
  std::stable_sort(s.ues.begin(), s.ues.end(), [](const UeScript& a, const UeScript& b) { return a.id < b.id; });

  try {
    s.phy.validate();
  } catch (const ConfigError& e) {
    fail(line_no, std::string("[phy] ") + e.what());
  }

  std::ifstream cfg_file(s.enb_config_path);
  if (!cfg_file) fail(enb_line, "cannot read eNB config " + s.enb_config_path.string());
  std::stringstream buf;
  buf << cfg_file.rdbuf();
  try {
    s.enb = config::load_enb_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(s.enb_config_path.string() + ":" + e.what());
  }
  if (!s.phy_seed_explicit) s.phy.rng_seed = s.seed;
  return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read scenario " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto s = parse_scenario(buf.str(), file.parent_path());
  if (s.name.empty()) s.name = file.stem().string();
  return s;
}

// ---------------------------------------------------------------------------
// The two halves of the split
// ---------------------------------------------------------------------------

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Radio plus UEs.
class PnfSide {
 public:
  PnfSide(const Scenario& s, net::Endpoint& link, Trace& trace)
      : radio_(s.enb, s.phy, &trace), link_(&link), trace_(&trace) {
    for (const auto& u : s.ues) {
      const auto& sub = *std::find_if(s.subscribers.begin(), s.subscribers.end(),
                                      [&](const SubscriberEntry& e) { return e.imsi == u.imsi; });
      ue::UeParams p;
      p.id = u.id;
      p.imsi = u.imsi;
      p.k = u.sim_k.value_or(sub.k);
      p.declared_ce = sub.ce_level;
      p.band = u.band;
      p.seed = mix_seed(s.seed, u.id);
      auto ue = std::make_unique<ue::Ue>(p, s.enb, radio_, &trace);
      for (const auto& at : u.script) ue->queue_at(at.not_before, at.command);
      ues_.push_back(std::move(ue));
    }
  }

  void send_indications(AbsSf now) {
    for (const auto& m : radio_.uplink_indications(now)) link_->send(fapi::encode(m));
  }

  /// Applies DL and UL configuration for `now`; the UL request closes the exchange.
  void receive_config(AbsSf now, std::chrono::milliseconds timeout) {
    const auto clk = from_abs(now);
    for (;;) {
      auto frame = link_->receive(timeout);
      if (!frame) {
        if (timeout.count() == 0) throw Error("no configuration from the VNF for subframe " + std::to_string(now));
        trace_->emit(now, TraceTag::warn, Component::phy, 0, "no configuration from VNF, subframe left empty");
        return;
      }
      fapi::FapiMessage msg;
      try {
        msg = fapi::decode(*frame);
      } catch (const CodecError& e) {
        trace_->emit(now, TraceTag::warn, Component::phy, 0, std::string("bad FAPI frame dropped: ") + e.what());
        continue;
      }
      const auto hdr = fapi::decode_header(*frame);
      if (hdr.sfn != clk.sfn || hdr.sf != clk.sf) {
        trace_->emit(now, TraceTag::warn, Component::phy, 0, "stale configuration dropped");
        continue;
      }
      radio_.apply(msg, now);
      if (std::holds_alternative<fapi::UlConfigRequest>(msg)) return;
    }
  }

  void step_ues(AbsSf now) {
    for (auto& u : ues_) u->step(now);
  }

  phy::Radio& radio() { return radio_; }
  std::vector<std::unique_ptr<ue::Ue>>& ues() { return ues_; }

 private:
  phy::Radio radio_;
  std::vector<std::unique_ptr<ue::Ue>> ues_;
  net::Endpoint* link_;
  Trace* trace_;
};

core::SubscriberTable subscriber_table(const Scenario& s) {
  core::SubscriberTable t;
  for (const auto& e : s.subscribers) t.add(e.imsi, e.k);
  return t;
}

/// eNB stack plus MME, joined by an in-process S1 link.
class VnfSide {
 public:
  VnfSide(const Scenario& s, net::Endpoint& link, Trace& trace)
      : enb_(s.enb, &trace),
        mme_(core::MmeOptions{"nbsim-mme", s.identity_request, mix_seed(s.seed, 0xffffffffULL)}, subscriber_table(s),
             &trace),
        link_(&link),
        s1_(net::open_link(net::LinkMode::inprocess())),
        trace_(&trace) {}

  /// Consumes indications up to the next SubframeIndication and answers with
  /// the configuration for that subframe. nullopt when nothing arrived in time.
  std::optional<AbsSf> tick(std::chrono::milliseconds timeout) {
    std::vector<fapi::FapiMessage> pending;
    AbsSf now = 0;
    for (;;) {
      auto frame = link_->receive(timeout);
      if (!frame) return std::nullopt;
      fapi::FapiMessage msg;
      try {
        msg = fapi::decode(*frame);
      } catch (const CodecError& e) {
        trace_->emit(next_, TraceTag::warn, Component::mac, 0, std::string("bad FAPI frame dropped: ") + e.what());
        continue;
      }
      if (const auto* si = std::get_if<fapi::SubframeIndication>(&msg)) {
        now = resolve_sfn_sf(next_ + 1024, si->sfn, si->sf);
        break;
      }
      pending.push_back(std::move(msg));
    }
    if (!started_) {
      enb_.start(now);
      started_ = true;
    }
    for (const auto& m : pending) enb_.on_indication(m, now);
    while (auto f = s1_.pnf->receive()) {
      try {
        enb_.on_s1(s1ap::decode(*f), now);
      } catch (const CodecError& e) {
        trace_->emit(now, TraceTag::warn, Component::rrc, 0, std::string("bad S1AP frame dropped: ") + e.what());
      }
    }
    for (const auto& m : enb_.end_subframe(now)) link_->send(fapi::encode(m));
    for (const auto& m : enb_.take_s1_outbox()) s1_.pnf->send(s1ap::encode(m));
    while (auto f = s1_.vnf->receive()) {
      try {
        for (const auto& reply : mme_.handle_s1(s1ap::decode(*f), now)) s1_.vnf->send(s1ap::encode(reply));
      } catch (const CodecError& e) {
        trace_->emit(now, TraceTag::warn, Component::mme, 0, std::string("bad S1AP frame dropped: ") + e.what());
      }
    }
    next_ = now + 1;
    return now;
  }

  const enb::Enb& enb() const { return enb_; }
  const core::Mme& mme() const { return mme_; }

 private:
  enb::Enb enb_;
  core::Mme mme_;
  net::Endpoint* link_;
  net::LinkPair s1_;  // pnf = eNB side, vnf = MME side
  Trace* trace_;
  AbsSf next_ = 0;
  bool started_ = false;
};

void fill_ue_reports(RunReport& r, const std::vector<std::unique_ptr<ue::Ue>>& ues) {
  for (const auto& u : ues) {
    r.ues.push_back(UeReport{u->id(), u->state().imsi, u->state().phase, u->state().assigned_ip, u->stats(),
                             u->transcript()});
  }
}

// ---------------------------------------------------------------------------
// Split mode: the VNF runs in a forked child and reports back over a pipe.
// ---------------------------------------------------------------------------

constexpr auto kSplitTimeout = 5000ms;

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_all(int fd) {
  std::string out;
  char buf[65536];
  for (;;) {
    auto n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

[[noreturn]] void run_vnf_child(const Scenario& s, net::Endpoint& link, int out_fd) {
  std::ostringstream out;
  int status = 0;
  try {
    Trace trace;
    VnfSide vnf(s, link, trace);
    for (AbsSf i = 0; i < s.run_length; ++i) {
      if (!vnf.tick(kSplitTimeout)) throw Error("PNF went silent");
    }
    for (const auto& e : trace.events()) out << "T " << format_event(e) << '\n';
    for (const auto& r : vnf.mme().sink()) {
      out << "S " << r.abs_sf << ' ' << r.dest_ip << ' ' << r.dest_port << ' ' << to_hex(r.payload) << '\n';
    }
    const auto& st = vnf.enb().stats();
    out << "E " << st.rars_scheduled << ' ' << st.rars_dropped << ' ' << st.contention_timeouts << ' '
        << st.initial_ue_messages << '\n';
  } catch (const std::exception& e) {
    out << "X " << e.what() << '\n';
    status = 3;
  }
  write_all(out_fd, out.str());
  ::close(out_fd);
  std::fflush(nullptr);
  ::_exit(status);
}

RunReport run_split(const Scenario& s) {
  // Bind both ends before forking so neither side can send into an unbound port.
  auto pnf_link = net::open_udp_endpoint(net::Role::pnf, s.split.port);
  auto vnf_link = net::open_udp_endpoint(net::Role::vnf, s.split.port);
  int fds[2];
  if (::pipe(fds) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
  std::fflush(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::close(fds[0]);
    pnf_link.reset();
    run_vnf_child(s, *vnf_link, fds[1]);
  }
  ::close(fds[1]);
  vnf_link.reset();

  Trace trace;
  RunReport report;
  std::string pnf_error;
  {
    PnfSide pnf(s, *pnf_link, trace);
    try {
      for (AbsSf now = 0; now < s.run_length; ++now) {
        pnf.send_indications(now);
        pnf.receive_config(now, kSplitTimeout);
        pnf.step_ues(now);
      }
    } catch (const std::exception& e) {
      pnf_error = e.what();
    }
    fill_ue_reports(report, pnf.ues());
    report.preambles = pnf.radio().preambles_transmitted();
  }
  const auto child_out = read_all(fds[0]);
  ::close(fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!pnf_error.empty()) throw Error("split run failed on the PNF side: " + pnf_error);

  std::istringstream in(child_out);
  for (std::string line; std::getline(in, line);) {
    if (line.size() < 2) continue;
    const auto body = std::string_view(line).substr(2);
    switch (line[0]) {
      case 'T':
        if (auto e = parse_event(body)) trace.append(std::move(*e));
        break;
      case 'S': {
        const auto w = words(body);
        if (w.size() == 4) {
          report.sink.push_back(core::UdpSinkRecord{w[1], static_cast<std::uint16_t>(std::stoul(w[2])),
                                                    from_hex(w[3]).value_or(Bytes{}), std::stoull(w[0])});
        }
        break;
      }
      case 'E': {
        const auto w = words(body);
        if (w.size() == 4) {
          report.enb = enb::EnbStats{std::stoull(w[0]), std::stoull(w[1]), std::stoull(w[2]), std::stoull(w[3])};
        }
        break;
      }
      case 'X':
        throw Error("split run failed on the VNF side: " + std::string(body));
      default:
        break;
    }
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw Error("VNF process exited abnormally");
  trace.finalize();
  report.trace = trace.events();
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// Monolithic simulation
// ---------------------------------------------------------------------------

struct Simulation::Impl {
  explicit Impl(const Scenario& sc)
      : s(sc), fapi(net::open_link(net::LinkMode::inprocess())), pnf(s, *fapi.pnf, trace), vnf(s, *fapi.vnf, trace) {}

  Scenario s;  // owns the EnbConfig the components point into
  Trace trace;
  net::LinkPair fapi;
  PnfSide pnf;
  VnfSide vnf;
  AbsSf now = 0;
};

Simulation::Simulation(const Scenario& s) : impl_(std::make_unique<Impl>(s)) {}
Simulation::~Simulation() = default;

void Simulation::step() {
  auto& m = *impl_;
  m.pnf.send_indications(m.now);
  if (m.vnf.tick(0ms) != m.now) throw Error("VNF lost subframe sync at " + std::to_string(m.now));
  m.pnf.receive_config(m.now, 0ms);
  m.pnf.step_ues(m.now);
  ++m.now;
}

void Simulation::run(AbsSf subframes) {
  for (AbsSf i = 0; i < subframes; ++i) step();
}

AbsSf Simulation::now() const noexcept { return impl_->now; }

ue::Ue& Simulation::ue(std::uint32_t id) {
  for (auto& u : impl_->pnf.ues()) {
    if (u->id() == id) return *u;
  }
  throw Error("no UE with id " + std::to_string(id));
}

std::vector<std::uint32_t> Simulation::ue_ids() const {
  std::vector<std::uint32_t> out;
  for (const auto& u : impl_->pnf.ues()) out.push_back(u->id());
  return out;
}

const core::Mme& Simulation::mme() const { return impl_->vnf.mme(); }
const enb::Enb& Simulation::enb() const { return impl_->vnf.enb(); }
const phy::Radio& Simulation::radio() const { return impl_->pnf.radio(); }

RunReport Simulation::report() {
  auto& m = *impl_;
  Trace sorted = m.trace;
  sorted.finalize();
  RunReport r;
  r.trace = sorted.events();
  r.sink = m.vnf.mme().sink();
  r.enb = m.vnf.enb().stats();
  r.preambles = m.pnf.radio().preambles_transmitted();
  fill_ue_reports(r, m.pnf.ues());
  evaluate_assertions(m.s, r);
  return r;
}

RunReport run_scenario(const Scenario& s) {
  if (s.split.kind == Split::Kind::loopback) {
    auto r = run_split(s);
    evaluate_assertions(s, r);
    return r;
  }
  Simulation sim(s);
  sim.run(s.run_length);
  return sim.report();
}

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

std::vector<std::string> s1ap_projection(std::span<const TraceEvent> trace) {
  std::vector<std::string> out;
  for (const auto& e : trace) {
    if (e.tag != TraceTag::s1ap) continue;
    out.push_back(e.detail.substr(0, e.detail.find(' ')));
  }
  return out;
}

namespace {

std::string expand_abbrev(std::string_view t) {
  if (t == "Setup") return "S1SetupRequest";
  if (t == "SetupResp") return "S1SetupResponse";
  if (t == "InitialUE") return "InitialUEMessage";
  if (t == "DL") return "DownlinkNASTransport";
  if (t == "UL") return "UplinkNASTransport";
  return std::string(t);
}

struct PatternItem {
  std::string type;  // empty: any
  std::size_t min = 1;
  bool unbounded = false;
};

std::vector<PatternItem> compile_pattern(std::span<const std::string> pattern) {
  std::vector<PatternItem> out;
  for (const auto& tok : pattern) {
    PatternItem p;
    std::string_view t = tok;
    if (t == "*") {
      p.min = 0;
      p.unbounded = true;
    } else if (t.size() > 1 && (t.back() == '*' || t.back() == '+')) {
      p.min = t.back() == '*' ? 0 : 1;
      p.unbounded = true;
      p.type = expand_abbrev(t.substr(0, t.size() - 1));
    } else {
      p.type = expand_abbrev(t);
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Longest prefix of `seq` that the pattern can consume (for diagnostics), and
/// whether a full match exists.
bool match(const std::vector<PatternItem>& pat, const std::vector<std::string>& seq, std::size_t pi, std::size_t si,
           std::size_t& furthest) {
  furthest = std::max(furthest, si);
  if (pi == pat.size()) return si == seq.size();
  const auto& p = pat[pi];
  auto ok = [&](std::size_t i) { return i < seq.size() && (p.type.empty() || seq[i] == p.type); };
  std::size_t n = 0;
  while (n < p.min) {
    if (!ok(si + n)) {
      furthest = std::max(furthest, si + n);
      return false;
    }
    ++n;
  }
  if (!p.unbounded) return match(pat, seq, pi + 1, si + n, furthest);
  for (;;) {
    if (match(pat, seq, pi + 1, si + n, furthest)) return true;
    if (!ok(si + n)) return false;
    ++n;
  }
}

long long stat_value(const UeReport& u, const std::string& field) {
  if (field == "preambles") return static_cast<long long>(u.stats.preambles);
  if (field == "rach_failures") return static_cast<long long>(u.stats.rach_failures);
  if (field == "ce_at_success") return u.stats.ce_at_success ? *u.stats.ce_at_success : -1;
  if (field == "attach_rejects") return static_cast<long long>(u.stats.attach_rejects);
  if (field == "guard_expiries") return static_cast<long long>(u.stats.guard_expiries);
  throw ConfigError("unknown UE statistic '" + field + "'");
}

std::string join(std::span<const std::string> v, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < v.size(); ++i) out += (i > from ? " " : "") + v[i];
  return out;
}

AssertionResult evaluate(const Assertion& a, const RunReport& r) {
  AssertionResult res{a.name, false, {}};
  auto find_ue = [&](const std::string& id) -> const UeReport* {
    for (const auto& u : r.ues) {
      if (std::to_string(u.id) == id) return &u;
    }
    return nullptr;
  };
  auto compare = [&](long long actual, const std::string& op, const std::string& expected_text) {
    const auto expected = std::stoll(expected_text);
    res.pass = (*comparison(op))(actual, expected);
    res.detail = "actual " + std::to_string(actual) + ", expected " + op + " " + expected_text;
  };

  if (a.check == "sink_count") {
    if (a.args.size() == 1) compare(static_cast<long long>(r.sink.size()), "==", a.args[0]);
    else compare(static_cast<long long>(r.sink.size()), a.args[0], a.args[1]);
  } else if (a.check == "sink_record") {
    const auto want = from_hex(a.args[2]);
    std::size_t n = 0;
    for (const auto& rec : r.sink) {
      if (rec.dest_ip == a.args[0] && std::to_string(rec.dest_port) == a.args[1] && want && rec.payload == *want) ++n;
    }
    res.pass = n > 0;
    res.detail = std::to_string(n) + " matching of " + std::to_string(r.sink.size()) + " records";
  } else if (a.check == "sink_absent") {
    const auto want = from_hex(a.args[0]);
    const auto n = std::count_if(r.sink.begin(), r.sink.end(),
                                 [&](const core::UdpSinkRecord& rec) { return want && rec.payload == *want; });
    res.pass = n == 0;
    res.detail = std::to_string(n) + " records carry that payload";
  } else if (a.check == "s1ap_sequence") {
    res = assert_s1ap_sequence(r.trace, a.args);
    res.name = a.name;
  } else if (a.check == "ue_attached" || a.check == "ue_phase") {
    const auto* u = find_ue(a.args[0]);
    const std::string want = a.check == "ue_attached" ? "ATTACHED" : a.args[1];
    if (u == nullptr) {
      res.detail = "no UE " + a.args[0];
    } else {
      res.pass = ue::to_string(u->phase) == want;
      res.detail = "phase " + std::string(ue::to_string(u->phase));
    }
  } else if (a.check == "trace_count") {
    const auto tag = *parse_tag(a.args[0]);
    const auto needle = join(a.args, 3);
    const auto n = std::count_if(r.trace.begin(), r.trace.end(), [&](const TraceEvent& e) {
      return e.tag == tag && (needle.empty() || e.detail.find(needle) != std::string::npos);
    });
    compare(n, a.args[1], a.args[2]);
  } else if (a.check == "at_response") {
    const auto* u = find_ue(a.args[0]);
    const auto want = join(a.args, 2);
    if (u == nullptr) {
      res.detail = "no UE " + a.args[0];
    } else {
      std::size_t seen = 0;
      for (const auto& x : u->transcript) {
        if (x.command.rfind(a.args[1], 0) != 0) continue;
        ++seen;
        if (std::find(x.responses.begin(), x.responses.end(), want) != x.responses.end()) res.pass = true;
      }
      res.detail = std::to_string(seen) + " matching commands executed";
    }
  } else if (a.check == "ue_stat") {
    const auto* u = find_ue(a.args[0]);
    if (u == nullptr) {
      res.detail = "no UE " + a.args[0];
    } else {
      compare(stat_value(*u, a.args[1]), a.args[2], a.args[3]);
    }
  }
  return res;
}

}  // namespace

AssertionResult assert_s1ap_sequence(std::span<const TraceEvent> trace, std::span<const std::string> pattern) {
  const auto seq = s1ap_projection(trace);
  const auto pat = compile_pattern(pattern);
  std::size_t furthest = 0;
  AssertionResult res{"s1ap_sequence", match(pat, seq, 0, 0, furthest), {}};
  if (res.pass) {
    res.detail = std::to_string(seq.size()) + " messages matched";
  } else if (furthest < seq.size()) {
    res.detail = "mismatch at position " + std::to_string(furthest) + " (got " + seq[furthest] + ")";
  } else {
    res.detail = "sequence ended after " + std::to_string(seq.size()) + " messages";
  }
  return res;
}

void evaluate_assertions(const Scenario& s, RunReport& report) {
  report.assertions.clear();
  for (const auto& a : s.assertions) report.assertions.push_back(evaluate(a, report));
  const bool all = std::all_of(report.assertions.begin(), report.assertions.end(),
                               [](const AssertionResult& r) { return r.pass; });
  report.exit_code = all ? kExitPass : kExitAssertion;
}

}  // namespace nbsim::scenario
