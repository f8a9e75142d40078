#include "factedit/remote.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "factedit/error.hpp"

namespace factedit {

using nlohmann::json;

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::RemoteFailure, std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string read_line(int fd, std::string& buffer, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(Errc::Timeout, "no response within " + std::to_string(timeout.count()) + " ms");
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::RemoteFailure, std::string("poll failed: ") + std::strerror(errno));
    }
    if (r == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::RemoteFailure, std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(Errc::RemoteFailure, "scorer closed the connection");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Transports

ProcessTransport::ProcessTransport(const std::string& command) {
  ignore_sigpipe();
  int in[2], out[2];
  if (::pipe(in) != 0) throw Error(Errc::RemoteFailure, "pipe failed");
  if (::pipe(out) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    throw Error(Errc::RemoteFailure, "pipe failed");
  }
  pid_ = ::fork();
  if (pid_ < 0) throw Error(Errc::RemoteFailure, "fork failed");
  if (pid_ == 0) {
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::close(in[0]);
    ::close(in[1]);
    ::close(out[0]);
    ::close(out[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
}

ProcessTransport::~ProcessTransport() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ <= 0) return;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

void ProcessTransport::send_line(const std::string& line) { write_all(to_child_, line + "\n"); }

std::string ProcessTransport::recv_line(std::chrono::milliseconds timeout) {
  return read_line(from_child_, buffer_, timeout);
}

TcpTransport::TcpTransport(const std::string& host, std::uint16_t port) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw Error(Errc::RemoteFailure, "cannot resolve " + host + ": " + ::gai_strerror(rc));
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd_ < 0) continue;
    if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd_);
    fd_ = -1;
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw Error(Errc::RemoteFailure, "cannot connect to " + host + ":" + std::to_string(port));
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::send_line(const std::string& line) {
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::RemoteFailure, std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string TcpTransport::recv_line(std::chrono::milliseconds timeout) { return read_line(fd_, buffer_, timeout); }

std::unique_ptr<Transport> open_transport(const std::string& endpoint) {
  constexpr std::string_view kTcp = "tcp://";
  constexpr std::string_view kStdio = "stdio:";
  if (endpoint.starts_with(kTcp)) {
    const std::string rest = endpoint.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) throw Error(Errc::InvalidConfig, "endpoint needs host:port: " + endpoint);
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, "bad port in endpoint " + endpoint);
    }
    if (port <= 0 || port > 65535) throw Error(Errc::InvalidConfig, "bad port in endpoint " + endpoint);
    return std::make_unique<TcpTransport>(rest.substr(0, colon), static_cast<std::uint16_t>(port));
  }
  if (endpoint.starts_with(kStdio)) {
    const std::string cmd = endpoint.substr(kStdio.size());
    if (cmd.empty()) throw Error(Errc::InvalidConfig, "empty stdio command");
    return std::make_unique<ProcessTransport>(cmd);
  }
  throw Error(Errc::InvalidConfig, "endpoint must start with tcp:// or stdio: (" + endpoint + ")");
}

// ---------------------------------------------------------------------------
// Client

RemoteClient::RemoteClient(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout)
    : transport_(std::move(transport)), timeout_(timeout) {
  const std::string line = transport_->recv_line(timeout_);
  json hello;
  try {
    hello = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::ProtocolError, std::string("malformed hello: ") + e.what());
  }
  if (!hello.is_object() || hello.value("type", "") != "hello") throw Error(Errc::ProtocolError, "expected hello frame");
  if (!hello.contains("protocol") || hello["protocol"] != kProtocolVersion) {
    throw Error(Errc::ProtocolError, "unsupported protocol version");
  }
  if (hello.contains("capabilities") && hello["capabilities"].is_array()) {
    for (const auto& c : hello["capabilities"]) {
      if (c.is_string()) capabilities_.push_back(c.get<std::string>());
    }
  }
}

json RemoteClient::call(std::string_view type, json payload) {
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  json req{{"id", id}, {"type", type}, {"payload", std::move(payload)}};
  transport_->send_line(req.dump());
  const std::string line = transport_->recv_line(timeout_);

  json resp;
  try {
    resp = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::ProtocolError, std::string("malformed frame: ") + e.what());
  }
  if (!resp.is_object() || !resp.contains("id")) throw Error(Errc::ProtocolError, "frame without id");
  if (!resp["id"].is_number_unsigned() || resp["id"].get<std::uint64_t>() != id) {
    throw Error(Errc::ProtocolError, "response id " + resp["id"].dump() + " does not match request " +
                                         std::to_string(id));
  }
  if (resp.contains("error")) {
    const json& err = resp["error"];
    std::string msg = err.is_object() ? err.value("code", "error") + ": " + err.value("message", "") : err.dump();
    throw Error(Errc::RemoteFailure, msg);
  }
  if (resp.value("type", "") != type) throw Error(Errc::ProtocolError, "response type does not match request");
  if (!resp.contains("payload") || !resp["payload"].is_object()) throw Error(Errc::ProtocolError, "missing payload");
  return std::move(resp["payload"]);
}

json tokens_json(const TokenSequence& seq) { return json(seq.tokens()); }

json evidence_json(const EvidenceSet& evidence) {
  json out = json::array();
  for (const auto& p : evidence.passages()) out.push_back(tokens_json(p));
  return out;
}

namespace {

double finite_number(const json& payload, const char* key) {
  if (!payload.contains(key) || !payload[key].is_number()) {
    throw Error(Errc::ProtocolError, std::string("payload lacks numeric '") + key + "'");
  }
  const double v = payload[key].get<double>();
  if (!std::isfinite(v)) throw Error(Errc::ProtocolError, std::string("non-finite '") + key + "'");
  return v;
}

std::vector<double> finite_vector(const json& payload, const char* key, std::size_t expected) {
  if (!payload.contains(key) || !payload[key].is_array()) {
    throw Error(Errc::ProtocolError, std::string("payload lacks array '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& v : payload[key]) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw Error(Errc::ProtocolError, std::string("non-finite entry in '") + key + "'");
    }
    out.push_back(v.get<double>());
  }
  if (out.size() != expected) {
    throw Error(Errc::ProtocolError, std::string("'") + key + "' has " + std::to_string(out.size()) +
                                         " entries, expected " + std::to_string(expected));
  }
  return out;
}

json masked_json(const MaskedSequence& m) { return json(m.marked_tokens()); }

}  // namespace

double RemoteFluency::pseudo_loglik(const TokenSequence& seq) const {
  const json r = client_->call("fluency", {{"claim", tokens_json(seq)}});
  const double v = finite_number(r, "pseudo_loglik");
  if (v > 0.0) throw Error(Errc::ProtocolError, "pseudo_loglik must be <= 0");
  return v;
}

double RemoteVerifier::support_prob(const TokenSequence& seq, const EvidenceSet& evidence) const {
  const json r = client_->call("verify", {{"claim", tokens_json(seq)}, {"evidence", evidence_json(evidence)}});
  const double p = finite_number(r, "prob");
  if (p < 0.0 || p > 1.0) throw Error(Errc::ProtocolError, "prob outside [0, 1]");
  return clamp_support(p);
}

std::vector<double> RemoteSaliency::token_saliency(const TokenSequence& seq, const EvidenceSet& evidence) const {
  const json r = client_->call("saliency", {{"claim", tokens_json(seq)}, {"evidence", evidence_json(evidence)}});
  auto s = finite_vector(r, "saliency", seq.size());
  for (double v : s) {
    if (v < 0.0) throw Error(Errc::ProtocolError, "negative saliency");
  }
  return s;
}

TokenDistribution RemoteProposer::token_dist(const MaskedSequence& masked, const EvidenceSet& evidence) const {
  const json r = client_->call("propose_token", {{"masked", masked_json(masked)}, {"evidence", evidence_json(evidence)}});
  if (!r.contains("tokens") || !r["tokens"].is_array()) throw Error(Errc::ProtocolError, "payload lacks 'tokens'");
  TokenDistribution d;
  for (const auto& t : r["tokens"]) {
    if (!t.is_string() || t.get<std::string>().empty()) throw Error(Errc::ProtocolError, "bad token");
    d.tokens.push_back(t.get<std::string>());
    // Tokens must be valid single words.
    (void)TokenSequence{d.tokens.back()};
  }
  d.probs = finite_vector(r, "probs", d.tokens.size());
  double total = 0.0;
  for (double p : d.probs) {
    if (p < 0.0) throw Error(Errc::ProtocolError, "negative token probability");
    total += p;
  }
  // An empty list means no token candidates, as with an empty local vocabulary.
  if (d.tokens.empty()) return d;
  if (std::abs(total - 1.0) > 1e-6) throw Error(Errc::ProtocolError, "token probs must sum to 1");
  for (double& p : d.probs) p /= total;
  return d;
}

std::vector<double> RemoteProposer::entity_scores(const MaskedSequence& masked, const EvidenceSet& evidence,
                                                  std::span<const TokenSequence> candidates) const {
  json cands = json::array();
  for (const auto& c : candidates) cands.push_back(tokens_json(c));
  const json r = client_->call("score_entities", {{"masked", masked_json(masked)},
                                                  {"evidence", evidence_json(evidence)},
                                                  {"candidates", std::move(cands)}});
  return finite_vector(r, "scores", candidates.size());
}

// ---------------------------------------------------------------------------
// Server

namespace {

struct BadRequest {
  std::string code;
  std::string message;
};

TokenSequence tokens_from(const json& payload, const char* key, bool allow_empty = false) {
  if (!payload.contains(key) || !payload[key].is_array()) throw BadRequest{"bad_request", std::string("missing ") + key};
  std::vector<std::string> out;
  for (const auto& t : payload[key]) {
    if (!t.is_string()) throw BadRequest{"bad_request", std::string(key) + " must hold strings"};
    out.push_back(t.get<std::string>());
  }
  if (out.empty() && !allow_empty) throw BadRequest{"bad_request", std::string(key) + " is empty"};
  try {
    return TokenSequence(std::move(out));
  } catch (const Error& e) {
    throw BadRequest{"bad_request", e.what()};
  }
}

EvidenceSet evidence_from(const json& payload) {
  std::vector<TokenSequence> passages;
  if (payload.contains("evidence")) {
    if (!payload["evidence"].is_array()) throw BadRequest{"bad_request", "evidence must be an array"};
    for (const auto& p : payload["evidence"]) {
      json wrap{{"p", p}};
      passages.push_back(tokens_from(wrap, "p", true));
    }
  }
  return EvidenceSet(std::move(passages), Gazetteer{});
}

MaskedSequence masked_from(const json& payload) {
  const TokenSequence seq = tokens_from(payload, "masked");
  std::size_t mask = seq.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq[i] == MaskedSequence::kMask) {
      mask = i;
      ++count;
    }
  }
  if (count != 1) throw BadRequest{"no_mask", "masked claim must hold exactly one mask marker"};
  return MaskedSequence{seq.slice(0, mask), seq.slice(mask + 1, seq.size())};
}

json error_frame(const json& id, const std::string& code, const std::string& message) {
  return json{{"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

std::string ScorerServer::hello() {
  return json{{"type", "hello"},
              {"protocol", kProtocolVersion},
              {"capabilities", {"verify", "fluency", "saliency", "propose_token", "score_entities"}}}
      .dump();
}

std::string ScorerServer::handle_line(std::string_view line) const {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::exception&) {
    return error_frame(nullptr, "bad_frame", "frame is not valid JSON").dump();
  }
  if (!req.is_object()) return error_frame(nullptr, "bad_frame", "frame must be an object").dump();
  const json id = req.contains("id") ? req["id"] : json(nullptr);
  if (!id.is_number_unsigned() && !id.is_string()) return error_frame(nullptr, "bad_frame", "missing id").dump();
  if (!req.contains("type") || !req["type"].is_string()) return error_frame(id, "bad_frame", "missing type").dump();
  if (!req.contains("payload") || !req["payload"].is_object()) {
    return error_frame(id, "bad_frame", "missing payload").dump();
  }
  const std::string type = req["type"].get<std::string>();
  const json& payload = req["payload"];

  try {
    json out;
    if (type == "verify") {
      const auto claim = tokens_from(payload, "claim", true);
      out["prob"] = scorers_.verifier->support_prob(claim, evidence_from(payload));
    } else if (type == "fluency") {
      out["pseudo_loglik"] = scorers_.fluency->pseudo_loglik(tokens_from(payload, "claim", true));
    } else if (type == "saliency") {
      out["saliency"] = scorers_.saliency->token_saliency(tokens_from(payload, "claim"), evidence_from(payload));
    } else if (type == "propose_token") {
      const auto d = scorers_.proposer->token_dist(masked_from(payload), evidence_from(payload));
      out["tokens"] = d.tokens;
      out["probs"] = d.probs;
    } else if (type == "score_entities") {
      const auto masked = masked_from(payload);
      if (!payload.contains("candidates") || !payload["candidates"].is_array()) {
        throw BadRequest{"bad_request", "missing candidates"};
      }
      std::vector<TokenSequence> cands;
      for (const auto& c : payload["candidates"]) {
        json wrap{{"c", c}};
        cands.push_back(tokens_from(wrap, "c"));
      }
      out["scores"] = scorers_.proposer->entity_scores(masked, evidence_from(payload), cands);
    } else {
      return error_frame(id, "unknown_type", "unknown request type '" + type + "'").dump();
    }
    return json{{"id", id}, {"type", type}, {"payload", std::move(out)}}.dump();
  } catch (const BadRequest& e) {
    return error_frame(id, e.code, e.message).dump();
  } catch (const std::exception& e) {
    return error_frame(id, "model_error", e.what()).dump();
  }
}

}  // namespace factedit
