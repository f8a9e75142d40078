#pragma once

// Scorer wire protocol. Newline-delimited JSON frames, one request in flight
// per connection:
//
//   server hello  {"type":"hello","protocol":1,"capabilities":[...]}
//   request       {"id":N,"type":T,"payload":{...}}
//   response      {"id":N,"type":T,"payload":{...}}
//   error         {"id":N|null,"error":{"code":C,"message":M}}
//
//   T               request payload                         response payload
//   verify          claim, evidence                         prob
//   fluency         claim                                   pseudo_loglik
//   saliency        claim, evidence                         saliency[|claim|]
//   propose_token   masked, evidence                        tokens[], probs[]
//   score_entities  masked, evidence, candidates            scores[|candidates|]
//
// claim and masked are token arrays (masked holds exactly one "[MASK]"),
// evidence is an array of token arrays, candidates an array of token arrays.

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factedit/mh_engine.hpp"
#include "factedit/proposal.hpp"
#include "factedit/scorers.hpp"

namespace factedit {

inline constexpr int kProtocolVersion = 1;

class Transport {
 public:
  virtual ~Transport() = default;
  /// `line` carries no newline; the transport appends one.
  virtual void send_line(const std::string& line) = 0;
  /// Next line without its newline. Throws Error(Timeout) or
  /// Error(RemoteFailure) when the peer closes the stream.
  virtual std::string recv_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `command` through /bin/sh and talks to its stdin/stdout.
class ProcessTransport final : public Transport {
 public:
  explicit ProcessTransport(const std::string& command);
  ~ProcessTransport() override;
  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  void send_line(const std::string& line) override;
  std::string recv_line(std::chrono::milliseconds timeout) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

class TcpTransport final : public Transport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void send_line(const std::string& line) override;
  std::string recv_line(std::chrono::milliseconds timeout) override;

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// "tcp://host:port" or "stdio:<shell command>".
std::unique_ptr<Transport> open_transport(const std::string& endpoint);

class RemoteClient {
 public:
  /// Waits for the server hello and checks the protocol version.
  RemoteClient(std::unique_ptr<Transport> transport, std::chrono::milliseconds timeout);

  /// Sends one request and returns the response payload. Throws
  /// Error(Timeout), Error(ProtocolError) for malformed frames or a
  /// mismatched id, and Error(RemoteFailure) for error frames.
  nlohmann::json call(std::string_view type, nlohmann::json payload);

  const std::vector<std::string>& capabilities() const noexcept { return capabilities_; }

 private:
  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  std::uint64_t next_id_ = 1;
  std::vector<std::string> capabilities_;
  std::mutex mutex_;
};

nlohmann::json tokens_json(const TokenSequence& seq);
nlohmann::json evidence_json(const EvidenceSet& evidence);

class RemoteFluency final : public FluencyModel {
 public:
  explicit RemoteFluency(RemoteClient& client) : client_(&client) {}
  double pseudo_loglik(const TokenSequence& seq) const override;

 private:
  RemoteClient* client_;
};

class RemoteVerifier final : public Verifier {
 public:
  explicit RemoteVerifier(RemoteClient& client) : client_(&client) {}
  double support_prob(const TokenSequence& seq, const EvidenceSet& evidence) const override;

 private:
  RemoteClient* client_;
};

class RemoteSaliency final : public SaliencyModel {
 public:
  explicit RemoteSaliency(RemoteClient& client) : client_(&client) {}
  std::vector<double> token_saliency(const TokenSequence& seq, const EvidenceSet& evidence) const override;

 private:
  RemoteClient* client_;
};

class RemoteProposer final : public Proposer {
 public:
  explicit RemoteProposer(RemoteClient& client) : client_(&client) {}
  TokenDistribution token_dist(const MaskedSequence& masked, const EvidenceSet& evidence) const override;
  std::vector<double> entity_scores(const MaskedSequence& masked, const EvidenceSet& evidence,
                                    std::span<const TokenSequence> candidates) const override;

 private:
  RemoteClient* client_;
};

/// Server half of the protocol over in-process scorers. Never throws on bad
/// input; malformed frames produce error frames.
class ScorerServer {
 public:
  explicit ScorerServer(const Scorers& scorers) : scorers_(scorers) {}

  static std::string hello();
  std::string handle_line(std::string_view line) const;

 private:
  Scorers scorers_;
};

}  // namespace factedit
