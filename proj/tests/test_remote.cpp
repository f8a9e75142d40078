#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <random>
#include <thread>

#include "factedit/cli_io.hpp"
#include "factedit/error.hpp"
#include "factedit/remote.hpp"

using namespace factedit;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

const std::string kSidecar = FACTEDIT_MOCK_SIDECAR;

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidAction;
}

// Replays canned response lines; records what was sent.
class ScriptedTransport final : public Transport {
 public:
  explicit ScriptedTransport(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  void send_line(const std::string& line) override { sent.push_back(line); }
  std::string recv_line(std::chrono::milliseconds) override {
    if (replies_.empty()) throw Error(Errc::RemoteFailure, "closed");
    auto s = replies_.front();
    replies_.pop_front();
    return s;
  }
  std::vector<std::string> sent;

 private:
  std::deque<std::string> replies_;
};

RemoteClient scripted(std::deque<std::string> replies) {
  replies.push_front(ScorerServer::hello());
  return RemoteClient(std::make_unique<ScriptedTransport>(std::move(replies)), 1000ms);
}

// The scorers the mock sidecar serves with an empty corpus.
struct LocalReference {
  RunConfig defaults;
  NGramMLM lm = NGramMLM::train({}, {}, {defaults.lm_order, defaults.lm_smoothing});
  LexicalVerifier verifier{defaults.verifier};
  OcclusionSaliency saliency{verifier};
  NGramProposer proposer{lm};
};

std::uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Background sidecar listening on TCP; killed on destruction.
struct TcpSidecar {
  std::uint16_t port = free_port();
  std::string pid_file = "/tmp/factedit_sidecar_" + std::to_string(::getpid()) + ".pid";

  TcpSidecar() {
    const std::string cmd = kSidecar + " --port " + std::to_string(port) + " >/dev/null 2>&1 & echo $! > " + pid_file;
    REQUIRE(std::system(cmd.c_str()) == 0);
  }
  ~TcpSidecar() {
    std::ifstream in(pid_file);
    int pid = 0;
    if (in >> pid && pid > 0) ::kill(pid, SIGTERM);
    std::remove(pid_file.c_str());
  }
  std::unique_ptr<Transport> connect() const {
    for (int attempt = 0; attempt < 100; ++attempt) {
      try {
        return std::make_unique<TcpTransport>("127.0.0.1", port);
      } catch (const Error&) {
        std::this_thread::sleep_for(50ms);
      }
    }
    FAIL("sidecar did not come up");
    return nullptr;
  }
};

bool well_formed_error(const json& j) {
  return j.is_object() && j.contains("id") && (j["id"].is_null() || j["id"].is_number() || j["id"].is_string()) &&
         j.contains("error") && j["error"].is_object() && j["error"].contains("code") &&
         j["error"]["code"].is_string() && j["error"].contains("message") && j["error"]["message"].is_string();
}

}  // namespace

TEST_CASE("stdio sidecar answers every request type like the local scorers") {
  RemoteClient client(open_transport("stdio:" + kSidecar), 10000ms);
  CHECK(client.capabilities().size() == 5);
  LocalReference local;

  const auto ev = EvidenceSet::build({TokenSequence::tokenize("Paris is the capital of France .")},
                                     TokenSequence::tokenize("Paris is the capital of Germany ."));
  const auto claim = TokenSequence::tokenize("Paris is the capital of Germany .");

  CHECK(RemoteVerifier(client).support_prob(claim, ev) == local.verifier.support_prob(claim, ev));
  CHECK(RemoteFluency(client).pseudo_loglik(claim) == local.lm.pseudo_loglik(claim));
  CHECK(RemoteSaliency(client).token_saliency(claim, ev) == local.saliency.token_saliency(claim, ev));

  const MaskedSequence masked{claim.slice(0, 5), claim.slice(6, 7)};
  const auto remote_dist = RemoteProposer(client).token_dist(masked, ev);
  const auto local_dist = local.proposer.token_dist(masked, ev);
  CHECK(remote_dist.tokens == local_dist.tokens);
  CHECK(remote_dist.probs == local_dist.probs);

  const std::vector<TokenSequence> cands = {TokenSequence{"France"}, TokenSequence{"Germany"}};
  CHECK(RemoteProposer(client).entity_scores(masked, ev, cands) == local.proposer.entity_scores(masked, ev, cands));

  // An error frame surfaces as RemoteFailure and the connection stays usable.
  CHECK(code_of([&] { client.call("nonsense", json::object()); }) == Errc::RemoteFailure);
  CHECK(code_of([&] { client.call("verify", json{{"claim", 3}}); }) == Errc::RemoteFailure);
  CHECK(RemoteFluency(client).pseudo_loglik(claim) == local.lm.pseudo_loglik(claim));
}

TEST_CASE("TCP sidecar") {
  TcpSidecar sidecar;
  RemoteClient a(sidecar.connect(), 10000ms);
  RemoteClient b(open_transport("tcp://127.0.0.1:" + std::to_string(sidecar.port)), 10000ms);
  const auto claim = TokenSequence::tokenize("a b c");
  CHECK(RemoteFluency(a).pseudo_loglik(claim) == RemoteFluency(b).pseudo_loglik(claim));
  CHECK(RemoteFluency(a).pseudo_loglik(claim) <= 0.0);
}

TEST_CASE("slow sidecar times out") {
  RemoteClient client(open_transport("stdio:" + kSidecar + " --delay-ms 2000"), 200ms);
  CHECK(code_of([&] { RemoteFluency(client).pseudo_loglik(TokenSequence{"a"}); }) == Errc::Timeout);
}

TEST_CASE("mismatched response ids are protocol errors") {
  RemoteClient client(open_transport("stdio:" + kSidecar + " --bad-ids"), 10000ms);
  CHECK(code_of([&] { RemoteFluency(client).pseudo_loglik(TokenSequence{"a"}); }) == Errc::ProtocolError);
}

TEST_CASE("endpoint parsing and connection failures") {
  CHECK(code_of([] { open_transport("udp://x"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { open_transport("tcp://localhost"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { open_transport("tcp://127.0.0.1:0"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { open_transport("stdio:"); }) == Errc::InvalidConfig);
  const auto port = free_port();
  CHECK(code_of([&] { open_transport("tcp://127.0.0.1:" + std::to_string(port)); }) == Errc::RemoteFailure);
}

TEST_CASE("client rejects a bad handshake") {
  auto bad_version = [] {
    std::deque<std::string> r = {R"({"type":"hello","protocol":99})"};
    RemoteClient c(std::make_unique<ScriptedTransport>(r), 100ms);
  };
  CHECK(code_of(bad_version) == Errc::ProtocolError);
  auto not_json = [] {
    std::deque<std::string> r = {"hello"};
    RemoteClient c(std::make_unique<ScriptedTransport>(r), 100ms);
  };
  CHECK(code_of(not_json) == Errc::ProtocolError);
}

TEST_CASE("client checks payload contracts") {
  const auto ev = EvidenceSet::build({TokenSequence{"a"}}, TokenSequence{"a"});
  {
    auto c = scripted({R"({"id":1,"type":"saliency","payload":{"saliency":[1.0]}})"});
    CHECK(code_of([&] { RemoteSaliency(c).token_saliency(TokenSequence{"a", "b"}, ev); }) == Errc::ProtocolError);
  }
  {
    auto c = scripted({R"({"id":1,"type":"verify","payload":{"prob":"high"}})"});
    CHECK(code_of([&] { RemoteVerifier(c).support_prob(TokenSequence{"a"}, ev); }) == Errc::ProtocolError);
  }
  {
    auto c = scripted({R"({"id":1,"type":"verify","payload":{"prob":1.0}})"});
    CHECK(RemoteVerifier(c).support_prob(TokenSequence{"a"}, ev) == clamp_support(1.0));
  }
  {
    auto c = scripted({R"({"id":1,"type":"fluency","payload":{"pseudo_loglik":0.5}})"});
    CHECK(code_of([&] { RemoteFluency(c).pseudo_loglik(TokenSequence{"a"}); }) == Errc::ProtocolError);
  }
  {
    auto c = scripted({R"({"id":1,"type":"propose_token","payload":{"tokens":["a","b"],"probs":[1.0]}})"});
    CHECK(code_of([&] { RemoteProposer(c).token_dist({TokenSequence{"a"}, {}}, ev); }) == Errc::ProtocolError);
  }
  {
    // No token candidates (an empty vocabulary) is a valid answer.
    auto c = scripted({R"({"id":1,"type":"propose_token","payload":{"tokens":[],"probs":[]}})"});
    CHECK(RemoteProposer(c).token_dist({TokenSequence{"a"}, {}}, ev).tokens.empty());
  }
  {
    auto c = scripted({R"({"id":1,"type":"score_entities","payload":{"scores":[0.0]}})"});
    const std::vector<TokenSequence> cands = {TokenSequence{"a"}, TokenSequence{"b"}};
    CHECK(code_of([&] { RemoteProposer(c).entity_scores({TokenSequence{"a"}, {}}, ev, cands); }) ==
          Errc::ProtocolError);
  }
  {
    auto c = scripted({R"({"id":1,"type":"fluency"})"});
    CHECK(code_of([&] { c.call("fluency", json::object()); }) == Errc::ProtocolError);
  }
  {
    auto c = scripted({R"({"id":1,"type":"verify","payload":{}})"});
    CHECK(code_of([&] { c.call("fluency", json::object()); }) == Errc::ProtocolError);
  }
  {
    // Requests carry the masked marker and increasing ids.
    auto transport = std::make_unique<ScriptedTransport>(std::deque<std::string>{
        ScorerServer::hello(), R"({"id":1,"type":"propose_token","payload":{"tokens":["a"],"probs":[1.0]}})"});
    auto* raw = transport.get();
    RemoteClient c(std::move(transport), 100ms);
    RemoteProposer(c).token_dist({TokenSequence{"x"}, TokenSequence{"y"}}, ev);
    const auto req = json::parse(raw->sent.at(0));
    CHECK(req["id"] == 1);
    CHECK(req["payload"]["masked"] == json::array({"x", "[MASK]", "y"}));
  }
}

TEST_CASE("server answers malformed frames with well-formed error frames") {
  LocalReference local;
  const ScorerServer server(Scorers{&local.lm, &local.verifier, &local.saliency, &local.proposer});
  const std::vector<std::string> seeds = {
      R"({"id":1,"type":"verify","payload":{"claim":["a","b"],"evidence":[["a"]]}})",
      R"({"id":2,"type":"fluency","payload":{"claim":["a"]}})",
      R"({"id":3,"type":"saliency","payload":{"claim":["a","b"],"evidence":[]}})",
      R"({"id":4,"type":"propose_token","payload":{"masked":["a","[MASK]"],"evidence":[["a"]]}})",
      R"({"id":5,"type":"score_entities","payload":{"masked":["[MASK]"],"evidence":[],"candidates":[["a"]]}})",
  };
  for (const auto& s : seeds) {
    const auto j = json::parse(server.handle_line(s));
    CHECK_FALSE(j.contains("error"));
  }
  for (const std::string bad : {"", "null", "[]", "{}", R"({"id":1})", R"({"id":1,"type":"verify"})",
                                R"({"id":1,"type":"verify","payload":{}})", R"({"id":-1,"type":"fluency","payload":{}})",
                                R"({"id":1,"type":"propose_token","payload":{"masked":["a"]}})",
                                R"({"id":1,"type":"propose_token","payload":{"masked":["[MASK]","[MASK]"]}})",
                                R"({"id":1,"type":"saliency","payload":{"claim":[1,2]}})"}) {
    CAPTURE(bad);
    const auto j = json::parse(server.handle_line(bad));
    CHECK(well_formed_error(j));
  }

  std::mt19937_64 rng(41);
  const std::string alphabet = "{}[]\":,0123456789abcdefghijklmnopqrstuvwxyz \\[MASK]";
  int errors = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string frame = seeds[rng() % seeds.size()];
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < edits && !frame.empty(); ++e) {
      const std::size_t pos = rng() % frame.size();
      switch (rng() % 3) {
        case 0:
          frame.erase(pos, 1 + rng() % 4);
          break;
        case 1:
          frame.insert(pos, 1, alphabet[rng() % alphabet.size()]);
          break;
        default:
          frame[pos] = alphabet[rng() % alphabet.size()];
      }
    }
    std::string reply;
    REQUIRE_NOTHROW(reply = server.handle_line(frame));
    json j;
    REQUIRE_NOTHROW(j = json::parse(reply));
    if (j.contains("error")) {
      ++errors;
      CHECK(well_formed_error(j));
    } else {
      CHECK(j.contains("id"));
      CHECK(j["payload"].is_object());
    }
  }
  CHECK(errors > 1000);
}

TEST_CASE("correct runs end to end against the sidecar") {
  const std::string dir = "/tmp/factedit_remote_" + std::to_string(::getpid());
  REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);
  {
    std::ofstream in(dir + "/in.jsonl");
    in << R"({"id":"1","claim":"Paris is the capital of Germany .","evidence":["Paris is the capital of France ."]})"
       << '\n';
    in << R"({"id":"2","claim":"Oslo is in Norway .","evidence":["Oslo is in Norway ."]})" << '\n';
  }
  const std::string cli = FACTEDIT_CLI;
  const std::string base = cli + " correct --input " + dir + "/in.jsonl --scorer remote --seed 3 ";
  const int ok = std::system((base + "--endpoint 'stdio:" + kSidecar + "' --output " + dir + "/o1.jsonl").c_str());
  CHECK(WEXITSTATUS(ok) == kExitOk);
  std::ifstream out(dir + "/o1.jsonl");
  std::string line;
  int records = 0;
  while (std::getline(out, line)) {
    const auto j = json::parse(line);
    CHECK(j.contains("corrected"));
    ++records;
  }
  CHECK(records == 2);

  const int down = std::system((base + "--endpoint tcp://127.0.0.1:" + std::to_string(free_port()) + " --output " +
                                dir + "/o2.jsonl 2>/dev/null")
                                   .c_str());
  CHECK(WEXITSTATUS(down) == kExitTransport);
  CHECK(std::system(("rm -rf " + dir).c_str()) == 0);
}
