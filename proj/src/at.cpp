#include <algorithm>
#include <cctype>
#include <charconv>

#include "nbsim/ue.hpp"

namespace nbsim::ue {

namespace {

const std::vector<std::string> kOk{"OK"};
const std::vector<std::string> kError{"ERROR"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

/// Splits on commas outside double quotes; fields are trimmed.
std::vector<std::string> split_args(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::optional<long> to_int(std::string_view s) {
  long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(std::string_view s) {
  const auto u = upper(s);
  if (u == "TRUE") return true;
  if (u == "FALSE") return false;
  return std::nullopt;
}

std::string bool_str(bool b) { return b ? "TRUE" : "FALSE"; }

std::vector<std::string> nconfig(const std::vector<std::string>& args, UeState& st) {
  if (args.size() != 2 || args[0].empty()) return kError;
  const auto key = upper(args[0]);
  const auto& val = args[1];
  auto set_flag = [&](bool& flag) {
    auto b = to_bool(val);
    if (!b) return kError;
    flag = *b;
    return kOk;
  };
  if (key == "AUTOCONNECT") return set_flag(st.nv.autoconnect);
  if (key == "CR_0354_0338_SCRAMBLING" || key == "SCRAMBLING") return set_flag(st.nv.scrambling);
  if (key == "CR_0859_SI_AVOID") return set_flag(st.nv.si_avoid);
  if (key == "MULTITONE") return set_flag(st.nv.multitone);
  if (key == "PCO_IE_TYPE") {
    const auto u = upper(val);
    if (u != "EPCO" && u != "PCO") return kError;
    st.nv.pco_ie_epco = u == "EPCO";
    return kOk;
  }
  if (key == "RELEASE_VERSION") {
    auto v = to_int(val);
    if (!v || (*v != 13 && *v != 14)) return kError;
    st.nv.release_version = static_cast<int>(*v);
    return kOk;
  }
  st.nv.other[key] = val;
  return kOk;
}

std::vector<std::string> nconfig_query(const UeState& st) {
  std::vector<std::string> out{
      "+NCONFIG:AUTOCONNECT," + bool_str(st.nv.autoconnect),
      "+NCONFIG:CR_0354_0338_SCRAMBLING," + bool_str(st.nv.scrambling),
      "+NCONFIG:CR_0859_SI_AVOID," + bool_str(st.nv.si_avoid),
      "+NCONFIG:PCO_IE_TYPE," + std::string(st.nv.pco_ie_epco ? "EPCO" : "PCO"),
      "+NCONFIG:RELEASE_VERSION," + std::to_string(st.nv.release_version),
      "+NCONFIG:MULTITONE," + bool_str(st.nv.multitone),
  };
  for (const auto& [k, v] : st.nv.other) out.push_back("+NCONFIG:" + k + "," + v);
  out.push_back("OK");
  return out;
}

std::vector<std::string> nsocr(const std::vector<std::string>& args, UeState& st) {
  if (args.size() < 3 || args.size() > 4 || upper(args[0]) != "DGRAM") return kError;
  auto proto = to_int(args[1]);
  auto port = to_int(args[2]);
  if (!proto || *proto != 17 || !port || *port < 0 || *port > 65535) return kError;
  bool listen = false;
  if (args.size() == 4) {
    auto l = to_int(args[3]);
    if (!l || (*l != 0 && *l != 1)) return kError;
    listen = *l == 1;
  }
  if (static_cast<int>(st.sockets.size()) >= kMaxSockets) return kError;
  for (const auto& [id, s] : st.sockets) {
    if (*port != 0 && s.local_port == *port) return kError;
  }
  int id = 0;
  while (st.sockets.count(id) != 0) ++id;
  st.sockets[id] = Socket{id, 17, static_cast<std::uint16_t>(*port), listen};
  return {std::to_string(id), "OK"};
}

std::vector<std::string> nsost(const std::vector<std::string>& args, UeState& st) {
  if (args.size() != 5) return kError;
  auto id = to_int(args[0]);
  auto port = to_int(args[2]);
  auto len = to_int(args[3]);
  auto payload = from_hex(args[4]);
  if (!id || st.sockets.count(static_cast<int>(*id)) == 0) return kError;
  if (!nas::parse_ipv4(args[1]) || !port || *port < 0 || *port > 65535) return kError;
  if (!len || *len < 0 || static_cast<std::size_t>(*len) > nas::kMaxUserPayload) return kError;
  if (!payload || payload->size() != static_cast<std::size_t>(*len)) return kError;
  if (st.phase != Phase::attached) return kError;
  st.outbox.push_back(Datagram{static_cast<int>(*id), args[1], static_cast<std::uint16_t>(*port), std::move(*payload)});
  return {std::to_string(*id) + "," + std::to_string(*len)};
}

}  // namespace

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::powered_on: return "POWERED_ON";
    case Phase::searching: return "SEARCHING";
    case Phase::camped: return "CAMPED";
    case Phase::rach: return "RACH";
    case Phase::rrc_connected: return "RRC_CONNECTED";
    case Phase::attached: return "ATTACHED";
  }
  return "?";
}

std::vector<std::string> execute_at(std::string_view line, UeState& st) {
  line = trim(line);
  const auto head_end = line.find_first_of("=?");
  const std::string cmd = upper(line.substr(0, head_end));
  const std::string_view tail = head_end == std::string_view::npos ? std::string_view{} : line.substr(head_end);
  const bool is_set = !tail.empty() && tail.front() == '=' && tail != "=?";
  const bool is_query = tail == "?";
  const bool is_test = tail == "=?";
  const bool is_exec = tail.empty();
  const auto args = is_set ? split_args(tail.substr(1)) : std::vector<std::string>{};

  if (cmd == "AT" && is_exec) return kOk;
  if (is_test && cmd.rfind("AT+", 0) == 0) return kOk;

  if (cmd == "AT+NRB" && is_exec) {
    st.phase = Phase::powered_on;
    st.sockets.clear();
    st.assigned_ip.reset();
    st.attach_requested = false;
    st.earfcn_lock.reset();
    st.outbox.clear();
    st.detach_pending = false;
    st.reboot_pending = true;
    return {"REBOOTING", "OK"};
  }
  if (cmd == "AT+NCONFIG") {
    if (is_query) return nconfig_query(st);
    if (is_set) return nconfig(args, st);
    return kError;
  }
  if (cmd == "AT+NEARFCN" && is_set) {
    if (args.size() < 2 || args.size() > 3) return kError;
    auto mode = to_int(args[0]);
    auto earfcn = to_int(args[1]);
    if (!mode || *mode < 0 || *mode > 2 || !earfcn || *earfcn < 0 || *earfcn > 262143) return kError;
    st.earfcn_lock = EarfcnLock{static_cast<int>(*mode), static_cast<int>(*earfcn)};
    return kOk;
  }
  if (cmd == "AT+CGDCONT") {
    if (is_query) {
      std::vector<std::string> out;
      for (const auto& c : st.nv.pdp_contexts) out.push_back("+CGDCONT:" + c);
      out.push_back("OK");
      return out;
    }
    if (!is_set || args.empty() || !to_int(args[0])) return kError;
    const auto cid = args[0];
    std::string joined;
    for (std::size_t i = 0; i < args.size(); ++i) joined += (i ? "," : "") + args[i];
    std::erase_if(st.nv.pdp_contexts, [&](const std::string& c) { return split_args(c)[0] == cid; });
    st.nv.pdp_contexts.push_back(joined);
    return kOk;
  }
  if (cmd == "AT+CGATT") {
    if (is_query) return {std::string("+CGATT:") + (st.phase == Phase::attached ? "1" : "0"), "OK"};
    if (!is_set || args.size() != 1) return kError;
    auto v = to_int(args[0]);
    if (!v || (*v != 0 && *v != 1)) return kError;
    if (*v == 1) {
      st.attach_requested = true;
    } else {
      st.attach_requested = false;
      st.detach_pending = true;
    }
    return kOk;
  }
  if (cmd == "AT+NSOCR" && is_set) return nsocr(args, st);
  if (cmd == "AT+NSOST" && is_set) return nsost(args, st);
  if (cmd == "AT+NSOCL" && is_set) {
    auto id = args.size() == 1 ? to_int(args[0]) : std::nullopt;
    if (!id || st.sockets.erase(static_cast<int>(*id)) == 0) return kError;
    return kOk;
  }
  if (cmd == "AT+CIMI" && is_exec) {
    if (st.imsi.empty()) return kError;
    return {st.imsi, "OK"};
  }
  return kError;
}

}  // namespace nbsim::ue
