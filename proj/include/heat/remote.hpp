#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>

#include "heat/model.hpp"

namespace heat {

// Where a gradient provider lives:
//   "tcp:HOST:PORT"   connect to a listening provider
//   "cmd:COMMAND"     spawn COMMAND through /bin/sh and talk over its stdio
struct Endpoint {
  enum class Kind { Tcp, Command };
  Kind kind = Kind::Command;
  std::string host;
  int port = 0;
  std::string command;

  static Endpoint parse(const std::string& text);
  static bool looks_like_endpoint(const std::string& text);
  std::string to_string() const;
};

struct RemoteOptions {
  // 0 accepts whatever the provider advertises.
  std::size_t expected_input_dim = 0;
  std::size_t expected_num_classes = 0;
  // Transport failures are retried this many times (with a reconnect).
  int retries = 3;
  std::chrono::milliseconds timeout{30000};
};

// A byte stream carrying newline-delimited JSON.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  // Both throw TransportError on failure.
  virtual void write_line(const std::string& line) = 0;
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint);

// Classifier served by an out-of-process gradient provider speaking protocol
// version 1. One request in flight per connection.
class RemoteClassifier final : public Classifier {
 public:
  RemoteClassifier(Endpoint endpoint, RemoteOptions options);
  ~RemoteClassifier() override;

  std::string kind() const override { return "remote"; }
  std::size_t input_dim() const override { return input_dim_; }
  std::size_t num_classes() const override { return num_classes_; }

  double loss(std::span<const double> x, int label) const override;
  LossGrad loss_and_grad(std::span<const double> x, int label) const override;
  int predict(std::span<const double> x) const override;

  std::shared_ptr<const Classifier> worker_instance(
      std::shared_ptr<const Classifier> self) const override;

  const Endpoint& endpoint() const noexcept { return endpoint_; }

  using Classifier::loss;
  using Classifier::loss_and_grad;
  using Classifier::predict;

 private:
  void connect_locked() const;
  // Sends {"id":N,"op":op,<fields>} and returns the matching response line
  // with its id already checked. Transport failures reconnect and retry.
  std::string request(const std::string& op, const std::string& fields) const;

  Endpoint endpoint_;
  RemoteOptions options_;
  // Fixed by the first handshake; reconnects must agree.
  mutable std::size_t input_dim_ = 0;
  mutable std::size_t num_classes_ = 0;

  mutable std::mutex mutex_;
  mutable std::unique_ptr<LineChannel> channel_;
  mutable long long next_id_ = 1;
};

std::shared_ptr<RemoteClassifier> connect_provider(const std::string& endpoint,
                                                   RemoteOptions options = {});

}  // namespace heat
