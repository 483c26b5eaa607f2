#include "hon/server.hpp"

#include <spdlog/spdlog.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <map>
#include <random>

#include "hon/error.hpp"
#include "hon/gateway.hpp"

namespace hon {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

double unix_now() {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

struct WebSocketServer::Impl {
    class Connection : public std::enable_shared_from_this<Connection> {
    public:
        Connection(tcp::socket socket, Impl& impl, ConnectionId id) : ws_(std::move(socket)), impl_(impl), id_(id) {}

        void start() {
            ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
        }

        void send(std::string text) {
            outbox_.push_back(std::move(text));
            if (outbox_.size() == 1) write();
        }

        void close() {
            beast::error_code ec;
            ws_.next_layer().socket().close(ec);
        }

    private:
        void on_accept(beast::error_code ec) {
            if (ec) return;
            impl_.opened(id_, shared_from_this());
            read();
        }

        void read() {
            ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    self->impl_.closed(self->id_);
                    return;
                }
                const std::string text = beast::buffers_to_string(self->buffer_.data());
                self->buffer_.consume(self->buffer_.size());
                self->impl_.received(self->id_, text);
                self->read();
            });
        }

        void write() {
            ws_.text(true);
            ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) {
                    self->impl_.closed(self->id_);
                    return;
                }
                self->outbox_.pop_front();
                if (!self->outbox_.empty()) self->write();
            });
        }

        websocket::stream<beast::tcp_stream> ws_;
        beast::flat_buffer buffer_;
        std::deque<std::string> outbox_;
        Impl& impl_;
        ConnectionId id_;
    };

    Impl(PlatformConfig config, const ServerOptions& options)
        : acceptor(ioc),
          timer(ioc),
          tick_interval(std::chrono::microseconds(static_cast<long long>(config.server.tick_s * 1e6))),
          core(config, std::make_shared<RecordStore>(config.server.store),
               GatewayCore::Options{options.seed ? options.seed : std::random_device{}(), true, true}) {
        tcp::endpoint endpoint(net::ip::make_address(options.host), options.port);
        acceptor.open(endpoint.protocol());
        acceptor.set_option(net::socket_base::reuse_address(true));
        acceptor.bind(endpoint);
        acceptor.listen();
    }

    void accept() {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            const ConnectionId id = next_id++;
            std::make_shared<Connection>(std::move(socket), *this, id)->start();
            accept();
        });
    }

    void schedule_tick() {
        timer.expires_after(tick_interval);
        timer.async_wait([this](beast::error_code ec) {
            if (ec) return;
            dispatch(core.tick(unix_now()));
            schedule_tick();
        });
    }

    void opened(ConnectionId id, std::shared_ptr<Connection> c) {
        connections[id] = c;
        dispatch(core.connect(id, unix_now()));
    }

    void closed(ConnectionId id) {
        if (connections.erase(id) == 0) return;
        dispatch(core.disconnect(id, unix_now()));
    }

    void received(ConnectionId id, const std::string& text) { dispatch(core.handle_text(id, text, unix_now())); }

    void dispatch(const std::vector<Outbound>& out) {
        for (const auto& o : out) {
            auto it = connections.find(o.to);
            if (it == connections.end()) continue;
            if (auto c = it->second.lock()) c->send(encode_frame(o.frame));
        }
    }

    void shutdown() {
        beast::error_code ec;
        acceptor.close(ec);
        timer.cancel();
        for (auto& [id, weak] : connections)
            if (auto c = weak.lock()) c->close();
        connections.clear();
        ioc.stop();
    }

    net::io_context ioc{1};
    tcp::acceptor acceptor;
    net::steady_timer timer;
    std::chrono::microseconds tick_interval;
    GatewayCore core;
    std::map<ConnectionId, std::weak_ptr<Connection>> connections;
    ConnectionId next_id = 1;
};

WebSocketServer::WebSocketServer(PlatformConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), options)) {}

WebSocketServer::~WebSocketServer() = default;

unsigned short WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WebSocketServer::run() {
    spdlog::info("listening on {}:{}", impl_->acceptor.local_endpoint().address().to_string(), port());
    impl_->accept();
    impl_->schedule_tick();
    impl_->ioc.run();
}

void WebSocketServer::stop() {
    net::post(impl_->ioc, [impl = impl_.get()] { impl->shutdown(); });
}

ServerOptions parse_listen_address(const std::string& address) {
    ServerOptions o;
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw InvalidConfig("listen address must be host:port, got " + address);
    if (colon > 0) o.host = address.substr(0, colon);
    try {
        const auto port = std::stoul(address.substr(colon + 1));
        if (port > 65535) throw std::out_of_range("port");
        o.port = static_cast<unsigned short>(port);
    } catch (const std::exception&) {
        throw InvalidConfig("bad port in listen address " + address);
    }
    return o;
}

}  // namespace hon
