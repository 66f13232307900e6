#include "server.hpp"

#include "lfd/io.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <memory>
#include <ostream>

namespace lfd::cli {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct ServerState {
  asio::io_context ioc;
  const EpisodeModels& models;
  const EpisodeConfig& cfg;
  const ServeOptions& opts;
  std::ostream& log;
  std::size_t opened = 0;
  std::size_t closed = 0;
  std::size_t saved = 0;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, ServerState& server, std::size_t id)
      : ws_(std::move(socket)), timer_(server.ioc), server_(server), id_(id) {}

  void start() {
    try {
      session_ = std::make_unique<Session>(server_.models, server_.cfg, server_.opts.session);
    } catch (const std::exception& e) {
      server_.log << "connection " << id_ << ": " << e.what() << '\n';
      finish();
      return;
    }
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->finish();
      self->ws_.text(true);
      self->send(self->session_->hello().dump());
      self->read();
      self->next_tick_ = std::chrono::steady_clock::now();
      self->schedule();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      for (const auto& reply : self->session_->handle(text)) self->send(reply.dump());
      self->read();
    });
  }

  void schedule() {
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / server_.opts.session.tick_hz));
    next_tick_ += period;
    timer_.expires_at(next_tick_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->done_) return;
      if (auto state = self->session_->tick()) self->send(state->dump());
      if (auto completed = self->session_->take_completed()) self->persist(*completed);
      self->schedule();
    });
  }

  void persist(const EpisodeLog& log) {
    const auto name = "session_" + std::string(run_mode_name(log.mode)) + "_" + std::to_string(log.seed) + "_" +
                      std::to_string(id_) + "_" + std::to_string(server_.saved++) + ".jsonl";
    const auto path = server_.opts.results_dir / name;
    try {
      save_log(path, log);
      server_.log << "saved " << path.string() << '\n';
    } catch (const std::exception& e) {
      server_.log << "could not save " << path.string() << ": " << e.what() << '\n';
    }
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  void finish() {
    if (done_) return;
    done_ = true;
    timer_.cancel();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).close(ignored);
    ++server_.closed;
    if (server_.opts.max_connections > 0 && server_.closed >= server_.opts.max_connections) server_.ioc.stop();
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  ServerState& server_;
  std::size_t id_;
  std::unique_ptr<Session> session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::chrono::steady_clock::time_point next_tick_;
  bool done_ = false;
};

void accept(ServerState& server, tcp::acceptor& acceptor) {
  acceptor.async_accept([&server, &acceptor](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    const std::size_t id = server.opened++;
    std::make_shared<Connection>(std::move(socket), server, id)->start();
    if (server.opts.max_connections == 0 || server.opened < server.opts.max_connections) accept(server, acceptor);
  });
}

}  // namespace

void serve(const EpisodeModels& models, const EpisodeConfig& cfg, const ServeOptions& opts, std::ostream& log) {
  // fail before listening when the models cannot drive the selected mode
  Session probe(models, cfg, opts.session);

  ServerState server{{}, models, cfg, opts, log};
  tcp::acceptor acceptor(server.ioc);
  const tcp::endpoint endpoint(asio::ip::make_address(opts.host), opts.port);
  acceptor.open(endpoint.protocol());
  acceptor.set_option(asio::socket_base::reuse_address(true));
  acceptor.bind(endpoint);
  acceptor.listen();
  const unsigned short port = acceptor.local_endpoint().port();
  log << "listening on ws://" << opts.host << ':' << port << " (" << run_mode_name(opts.session.mode) << ", "
      << opts.session.tick_hz << " Hz)\n";
  if (opts.on_listen) opts.on_listen(port);

  asio::signal_set signals(server.ioc, SIGINT, SIGTERM);
  signals.async_wait([&server](beast::error_code, int) { server.ioc.stop(); });
  accept(server, acceptor);
  server.ioc.run();
}

}  // namespace lfd::cli
