#include "heat/remote.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <thread>

extern char** environ;

namespace heat {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction current {};
    sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) signal(SIGPIPE, SIG_IGN);
  });
}

// Buffered newline framing over a pair of file descriptors.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

  void write_line(const std::string& line) override {
    std::string out = line;
    out += '\n';
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = ::write(write_fd_, out.data() + done, out.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) throw TransportError("timed out waiting for a response");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(left));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw TransportError("provider closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

class SocketChannel final : public FdChannel {
 public:
  explicit SocketChannel(int fd) : FdChannel(fd, fd) {}
  ~SocketChannel() override { ::close(read_fd_); }
};

class ProcessChannel final : public FdChannel {
 public:
  ProcessChannel(pid_t pid, int read_fd, int write_fd) : FdChannel(read_fd, write_fd), pid_(pid) {}
  ~ProcessChannel() override {
    ::close(write_fd_);
    ::close(read_fd_);
    // Closing stdin asks the provider to exit; give it a moment before forcing.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

 private:
  pid_t pid_;
};

std::unique_ptr<LineChannel> spawn(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError("pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw TransportError(std::string("cannot spawn provider: ") + std::strerror(rc));
  }
  return std::make_unique<ProcessChannel>(pid, from_child[0], to_child[1]);
}

std::unique_ptr<LineChannel> dial(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw TransportError(std::string("cannot resolve ") + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = found; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  return std::make_unique<SocketChannel>(fd);
}

void append_vector(std::string& out, std::span<const double> x) {
  char buf[40];
  out += '[';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", x[i]);
    out += buf;
  }
  out += ']';
}

json parse_response(const std::string& line) {
  try {
    json doc = json::parse(line);
    if (!doc.is_object()) throw Error(ErrorCode::RemoteFailure, "response is not an object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::RemoteFailure, std::string("malformed response: ") + e.what());
  }
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  if (text.rfind("cmd:", 0) == 0) {
    ep.kind = Kind::Command;
    ep.command = text.substr(4);
    if (ep.command.empty()) throw Error(ErrorCode::InvalidConfig, "empty provider command");
    return ep;
  }
  if (text.rfind("tcp:", 0) == 0) {
    const std::string rest = text.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw Error(ErrorCode::InvalidConfig, "tcp endpoint must be tcp:HOST:PORT, got " + text);
    }
    ep.kind = Kind::Tcp;
    ep.host = rest.substr(0, colon);
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad port in endpoint " + text);
    }
    if (ep.port <= 0 || ep.port > 65535) throw Error(ErrorCode::InvalidConfig, "bad port in endpoint " + text);
    return ep;
  }
  throw Error(ErrorCode::InvalidConfig, "endpoint must start with tcp: or cmd:, got " + text);
}

bool Endpoint::looks_like_endpoint(const std::string& text) {
  return text.rfind("cmd:", 0) == 0 || text.rfind("tcp:", 0) == 0;
}

std::string Endpoint::to_string() const {
  return kind == Kind::Tcp ? "tcp:" + host + ":" + std::to_string(port) : "cmd:" + command;
}

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint) {
  ignore_sigpipe();
  return endpoint.kind == Endpoint::Kind::Tcp ? dial(endpoint.host, endpoint.port)
                                              : spawn(endpoint.command);
}

RemoteClassifier::RemoteClassifier(Endpoint endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  std::lock_guard lock(mutex_);
  connect_locked();
}

RemoteClassifier::~RemoteClassifier() = default;

void RemoteClassifier::connect_locked() const {
  channel_.reset();
  std::unique_ptr<LineChannel> channel;
  json hello;
  try {
    channel = open_channel(endpoint_);
    channel->write_line(R"({"op":"hello","version":1})");
    hello = parse_response(channel->read_line(options_.timeout));
  } catch (const TransportError& e) {
    throw Error(ErrorCode::ConnectFailure, endpoint_.to_string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConnectFailure, endpoint_.to_string() + ": " + e.what());
  }
  if (hello.contains("error")) {
    throw Error(ErrorCode::HandshakeMismatch,
                endpoint_.to_string() + " rejected hello: " + hello["error"].dump());
  }
  if (hello.value("op", "") != "hello" || !hello.contains("version") || hello["version"] != 1) {
    throw Error(ErrorCode::HandshakeMismatch, endpoint_.to_string() + ": expected protocol version 1");
  }
  if (!hello.contains("input_dim") || !hello["input_dim"].is_number_unsigned() ||
      !hello.contains("num_classes") || !hello["num_classes"].is_number_unsigned()) {
    throw Error(ErrorCode::HandshakeMismatch, endpoint_.to_string() + ": hello lacks input_dim/num_classes");
  }
  const auto dim = hello["input_dim"].get<std::size_t>();
  const auto classes = hello["num_classes"].get<std::size_t>();
  const std::size_t want_dim = input_dim_ ? input_dim_ : options_.expected_input_dim;
  const std::size_t want_classes = num_classes_ ? num_classes_ : options_.expected_num_classes;
  if (want_dim && dim != want_dim) {
    throw Error(ErrorCode::HandshakeMismatch, endpoint_.to_string() + ": input_dim " +
                                                  std::to_string(dim) + ", expected " +
                                                  std::to_string(want_dim));
  }
  if (want_classes && classes != want_classes) {
    throw Error(ErrorCode::HandshakeMismatch, endpoint_.to_string() + ": num_classes " +
                                                  std::to_string(classes) + ", expected " +
                                                  std::to_string(want_classes));
  }
  if (classes < 2 || dim < 1) {
    throw Error(ErrorCode::HandshakeMismatch, endpoint_.to_string() + ": degenerate dimensions");
  }
  input_dim_ = dim;
  num_classes_ = classes;
  channel_ = std::move(channel);
  next_id_ = 1;
}

std::string RemoteClassifier::request(const std::string& op, const std::string& fields) const {
  std::lock_guard lock(mutex_);
  std::string last_error = "not connected";
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    try {
      if (!channel_) connect_locked();
      const long long id = next_id_++;
      channel_->write_line("{\"id\":" + std::to_string(id) + ",\"op\":\"" + op + "\"," + fields + "}");
      std::string line = channel_->read_line(options_.timeout);
      const json doc = parse_response(line);
      if (!doc.contains("id") || doc["id"] != id) {
        throw Error(ErrorCode::RemoteFailure, "response id does not echo request id " + std::to_string(id));
      }
      if (doc.contains("error")) {
        throw Error(ErrorCode::RemoteFailure, "provider error: " + doc["error"].dump());
      }
      return line;
    } catch (const TransportError& e) {
      last_error = e.what();
      channel_.reset();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConnectFailure) throw;
      last_error = e.what();
      channel_.reset();
    }
  }
  throw Error(ErrorCode::RemoteFailure, endpoint_.to_string() + ": giving up after " +
                                            std::to_string(options_.retries) + " retries: " + last_error);
}

LossGrad RemoteClassifier::loss_and_grad(std::span<const double> x, int label) const {
  check_input(x, label);
  std::string fields = "\"x\":";
  append_vector(fields, x);
  fields += ",\"y\":" + std::to_string(label);
  const json doc = parse_response(request("loss_and_grad", fields));
  if (!doc.contains("loss") || !doc["loss"].is_number() || !doc.contains("grad") ||
      !doc["grad"].is_array() || doc["grad"].size() != input_dim_) {
    throw Error(ErrorCode::RemoteFailure, "loss_and_grad response lacks loss/grad of length input_dim");
  }
  LossGrad out;
  out.loss = doc["loss"].get<double>();
  out.grad.reserve(input_dim_);
  for (const json& v : doc["grad"]) {
    if (!v.is_number()) throw Error(ErrorCode::RemoteFailure, "gradient contains a non-number");
    out.grad.push_back(v.get<double>());
  }
  if (!std::isfinite(out.loss)) throw Error(ErrorCode::RemoteFailure, "non-finite remote loss");
  return out;
}

double RemoteClassifier::loss(std::span<const double> x, int label) const {
  return loss_and_grad(x, label).loss;
}

int RemoteClassifier::predict(std::span<const double> x) const {
  check_input(x);
  std::string fields = "\"x\":";
  append_vector(fields, x);
  const json doc = parse_response(request("predict", fields));
  if (!doc.contains("label") || !doc["label"].is_number_integer()) {
    throw Error(ErrorCode::RemoteFailure, "predict response lacks an integer label");
  }
  const auto label = doc["label"].get<long long>();
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes_) {
    throw Error(ErrorCode::RemoteFailure, "remote label out of range");
  }
  return static_cast<int>(label);
}

std::shared_ptr<const Classifier> RemoteClassifier::worker_instance(
    std::shared_ptr<const Classifier>) const {
  RemoteOptions opts = options_;
  opts.expected_input_dim = input_dim_;
  opts.expected_num_classes = num_classes_;
  return std::make_shared<RemoteClassifier>(endpoint_, opts);
}

std::shared_ptr<RemoteClassifier> connect_provider(const std::string& endpoint,
                                                   RemoteOptions options) {
  return std::make_shared<RemoteClassifier>(Endpoint::parse(endpoint), options);
}

}  // namespace heat
