// Scorer server backed by the reference scorers. Speaks the wire protocol
// over stdin/stdout, or over TCP with --port. Used to exercise the remote
// adapters without neural models.
//
//   factedit_mock_sidecar [--corpus FILE] [--port N] [--delay-ms N] [--bad-ids]

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "factedit/cli_io.hpp"
#include "factedit/remote.hpp"

namespace {

struct Behaviour {
  int delay_ms = 0;
  bool bad_ids = false;
};

std::string respond(const factedit::ScorerServer& server, const std::string& line, const Behaviour& b) {
  if (b.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(b.delay_ms));
  std::string out = server.handle_line(line);
  if (b.bad_ids) {
    auto j = nlohmann::json::parse(out);
    if (j.contains("id") && j["id"].is_number_unsigned()) j["id"] = j["id"].get<std::uint64_t>() + 1000;
    out = j.dump();
  }
  return out;
}

void serve_fd(int fd, const factedit::ScorerServer& server, const Behaviour& b) {
  auto send_all = [fd](const std::string& s) {
    std::size_t off = 0;
    while (off < s.size()) {
      const ssize_t n = ::send(fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  };
  if (!send_all(factedit::ScorerServer::hello() + "\n")) return;
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!send_all(respond(server, line, b) + "\n")) return;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-scorer sidecar"};
  std::string corpus_path;
  int port = 0;
  Behaviour behaviour;
  app.add_option("--corpus", corpus_path, "Training text for the n-gram model, one passage per line");
  app.add_option("--port", port, "Listen on this TCP port instead of stdio (0 = stdio)");
  app.add_option("--delay-ms", behaviour.delay_ms, "Sleep before every response (timeout tests)");
  app.add_flag("--bad-ids", behaviour.bad_ids, "Answer with the wrong id (protocol tests)");
  CLI11_PARSE(app, argc, argv);

  std::vector<factedit::TokenSequence> corpus;
  if (!corpus_path.empty()) {
    try {
      corpus = factedit::read_gazetteer_file(corpus_path);
    } catch (const factedit::Error& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
  }
  const factedit::RunConfig defaults;
  const auto lm = factedit::NGramMLM::train(corpus, {}, {defaults.lm_order, defaults.lm_smoothing});
  const factedit::LexicalVerifier verifier(defaults.verifier);
  const factedit::OcclusionSaliency saliency(verifier);
  const factedit::NGramProposer proposer(lm);
  const factedit::ScorerServer server(factedit::Scorers{&lm, &verifier, &saliency, &proposer});

  if (port == 0) {
    std::cout << factedit::ScorerServer::hello() << '\n' << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) std::cout << respond(server, line, behaviour) << '\n' << std::flush;
    return 0;
  }

  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener, 16) != 0) {
    std::perror("bind");
    return 3;
  }
  while (true) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) continue;
    std::thread([fd, &server, behaviour] {
      serve_fd(fd, server, behaviour);
      ::close(fd);
    }).detach();
  }
}
