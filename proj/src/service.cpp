#include "breathsense/service.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <spdlog/spdlog.h>

#include "breathsense/error.hpp"
#include "breathsense/json_io.hpp"

namespace breathsense {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

namespace service_detail {
class WsSubscriber;
}
using service_detail::WsSubscriber;

struct SessionService::Impl {
    ServiceConfig cfg;
    net::io_context ioc{1};
    std::optional<tcp::acceptor> acceptor;
    std::thread thread;
    std::uint16_t bound_port = 0;
    std::atomic<bool> models_loaded{false};
    bool running = false;

    // Session state, guarded by `mutex` (the coordinator).
    mutable std::mutex mutex;
    std::optional<SessionInfo> session;
    std::ofstream log;
    MetricsAggregator aggregator;
    std::optional<ComplianceTracker> compliance;

    // Only touched on the I/O thread.
    std::vector<std::weak_ptr<WsSubscriber>> subscribers;
    std::atomic<std::size_t> subscriber_total{0};

    explicit Impl(ServiceConfig c) : cfg(std::move(c)) {}

    void do_accept();
    http::response<http::string_body> handle(const http::request<http::string_body>& req);
    SessionMetrics current_metrics_locked() const;

    SessionInfo start_session(std::optional<ExerciseScript> script);
    SessionMetrics stop_session();
};

namespace service_detail {

class WsSubscriber : public std::enable_shared_from_this<WsSubscriber> {
public:
    WsSubscriber(tcp::socket socket, SessionService::Impl& owner)
        : ws_(std::move(socket)), owner_(owner) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->open_ = true;
            self->owner_.subscribers.push_back(self);
            self->owner_.subscriber_total.fetch_add(1);
            self->do_read();
        });
    }

    void enqueue(const std::shared_ptr<const std::string>& msg) {
        if (!open_ || closing_) return;
        if (queue_.size() >= owner_.cfg.subscriber_queue) {
            spdlog::warn("websocket subscriber exceeded {} queued events, closing", owner_.cfg.subscriber_queue);
            begin_close(websocket::close_code::try_again_later);
            return;
        }
        queue_.push_back(msg);
        if (!writing_) do_write();
    }

    void begin_close(websocket::close_code code) {
        if (closing_) return;
        closing_ = true;
        close_code_ = code;
        // Drop everything not already on the wire.
        if (writing_) {
            while (queue_.size() > 1) queue_.pop_back();
        } else {
            queue_.clear();
            do_close();
        }
    }

private:
    void do_read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->finish();
                return;
            }
            self->buffer_.consume(self->buffer_.size());  // client messages are ignored
            self->do_read();
        });
    }

    void do_write() {
        writing_ = true;
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) {
                self->finish();
                return;
            }
            self->queue_.pop_front();
            if (self->closing_) {
                self->queue_.clear();
                self->do_close();
            } else if (!self->queue_.empty()) {
                self->do_write();
            }
        });
    }

    void do_close() {
        if (close_sent_) return;
        close_sent_ = true;
        ws_.async_close(websocket::close_reason(close_code_), [self = shared_from_this()](beast::error_code) {});
    }

    void finish() {
        if (!open_) return;
        open_ = false;
        owner_.subscriber_total.fetch_sub(1);
        std::erase_if(owner_.subscribers, [this](const std::weak_ptr<WsSubscriber>& w) {
            auto s = w.lock();
            return !s || s.get() == this;
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    SessionService::Impl& owner_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> queue_;
    bool open_ = false;
    bool writing_ = false;
    bool closing_ = false;
    bool close_sent_ = false;
    websocket::close_code close_code_ = websocket::close_code::normal;
};

}  // namespace service_detail

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, SessionService::Impl& owner) : stream_(std::move(socket)), owner_(owner) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_both, ignored);
            return;
        }
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/stream") {
                stream_.expires_never();
                std::make_shared<WsSubscriber>(stream_.release_socket(), owner_)->run(std::move(req_));
                return;
            }
        }
        auto res = std::make_shared<http::response<http::string_body>>(owner_.handle(req_));
        res->keep_alive(req_.keep_alive());
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec || !res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    SessionService::Impl& owner_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

http::response<http::string_body> json_response(http::status status, const Json& body, unsigned version) {
    http::response<http::string_body> res{status, version};
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.body() = body.dump();
    res.prepare_payload();
    return res;
}

}  // namespace

void SessionService::Impl::do_accept() {
    acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec == net::error::operation_aborted) return;
            spdlog::warn("accept failed: {}", ec.message());
        } else {
            std::make_shared<HttpSession>(std::move(socket), *this)->run();
        }
        if (acceptor && acceptor->is_open()) do_accept();
    });
}

SessionMetrics SessionService::Impl::current_metrics_locked() const {
    SessionMetrics m = aggregator.metrics();
    if (compliance) m.compliance = compliance->score();
    return m;
}

http::response<http::string_body> SessionService::Impl::handle(const http::request<http::string_body>& req) {
    const auto v = req.version();
    const std::string target(req.target());
    const auto method = req.method();

    if (method == http::verb::options) {
        http::response<http::string_body> res{http::status::no_content, v};
        res.set(http::field::access_control_allow_origin, "*");
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        res.prepare_payload();
        return res;
    }
    auto method_not_allowed = [&] { return json_response(http::status::method_not_allowed, {{"error", "method not allowed"}}, v); };

    if (target == "/health") {
        if (method != http::verb::get) return method_not_allowed();
        return json_response(http::status::ok, {{"status", "ok"}, {"models_loaded", models_loaded.load()}}, v);
    }
    if (target == "/session") {
        if (method != http::verb::get) return method_not_allowed();
        std::lock_guard lock(mutex);
        Json body{{"active", session.has_value()}};
        if (session) {
            body["session_id"] = session->session_id;
            body["started_at"] = session->started_at;
            body["metrics"] = metrics_to_json(current_metrics_locked());
        }
        return json_response(http::status::ok, body, v);
    }
    if (target == "/session/start") {
        if (method != http::verb::post) return method_not_allowed();
        std::optional<ExerciseScript> script;
        const auto& body = req.body();
        try {
            if (body.find_first_not_of(" \t\r\n") != std::string::npos) {
                const Json j = Json::parse(body);
                if (j.is_array()) script = script_from_json(j);
                else if (j.is_object() && j.contains("script") && !j["script"].is_null()) script = script_from_json(j["script"]);
                else if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be a script array or an object");
            }
        } catch (const Json::exception& e) {
            return json_response(http::status::bad_request, {{"error", "InvalidArgument"}, {"message", e.what()}}, v);
        } catch (const Error& e) {
            return json_response(http::status::bad_request, {{"error", std::string(error_name(e.code()))}, {"message", e.what()}}, v);
        }
        try {
            const SessionInfo info = start_session(std::move(script));
            return json_response(http::status::ok,
                                 {{"session_id", info.session_id}, {"started_at", info.started_at}, {"log", info.log_path}}, v);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SessionAlreadyActive)
                return json_response(http::status::conflict, {{"error", "SessionAlreadyActive"}, {"message", e.what()}}, v);
            return json_response(http::status::internal_server_error, {{"error", std::string(error_name(e.code()))}, {"message", e.what()}}, v);
        }
    }
    if (target == "/session/stop") {
        if (method != http::verb::post) return method_not_allowed();
        try {
            return json_response(http::status::ok, metrics_to_json(stop_session()), v);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NoActiveSession)
                return json_response(http::status::not_found, {{"error", "NoActiveSession"}, {"message", e.what()}}, v);
            return json_response(http::status::internal_server_error, {{"error", std::string(error_name(e.code()))}, {"message", e.what()}}, v);
        }
    }
    return json_response(http::status::not_found, {{"error", "not found"}, {"target", target}}, v);
}

SessionInfo SessionService::Impl::start_session(std::optional<ExerciseScript> script) {
    std::lock_guard lock(mutex);
    if (session) throw Error(ErrorCode::SessionAlreadyActive, "session " + session->session_id + " is already active");
    std::filesystem::create_directories(cfg.log_dir);
    SessionInfo info;
    std::string path;
    do {  // unique within the log directory
        info.session_id = boost::uuids::to_string(boost::uuids::random_generator()());
        path = (std::filesystem::path(cfg.log_dir) / (info.session_id + ".jsonl")).string();
    } while (std::filesystem::exists(path));
    info.started_at = utc_now_iso();
    info.log_path = path;
    log.open(path, std::ios::binary | std::ios::trunc);
    if (!log) throw Error(ErrorCode::IoError, "cannot create session log " + path);
    aggregator = MetricsAggregator{};
    compliance.reset();
    if (script) compliance.emplace(std::move(*script), cfg.compliance_threshold);
    session = info;
    spdlog::info("session {} started, logging to {}", info.session_id, path);
    return info;
}

SessionMetrics SessionService::Impl::stop_session() {
    std::lock_guard lock(mutex);
    if (!session) throw Error(ErrorCode::NoActiveSession, "no active session");
    const SessionMetrics m = current_metrics_locked();
    log << metrics_to_json(m).dump() << '\n';
    log.close();
    spdlog::info("session {} stopped after {} events", session->session_id, m.events);
    session.reset();
    compliance.reset();
    return m;
}

SessionService::SessionService(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

SessionService::~SessionService() {
    stop();
}

void SessionService::start() {
    if (impl_->running) return;
    auto& im = *impl_;
    beast::error_code ec;
    const auto address = net::ip::make_address(im.cfg.bind_address, ec);
    if (ec) throw Error(ErrorCode::InvalidArgument, "bad bind address " + im.cfg.bind_address);
    const tcp::endpoint ep{address, im.cfg.port};
    im.acceptor.emplace(im.ioc);
    im.acceptor->open(ep.protocol(), ec);
    if (!ec) im.acceptor->set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) im.acceptor->bind(ep, ec);
    if (ec) {
        im.acceptor.reset();
        if (ec == net::error::address_in_use)
            throw Error(ErrorCode::PortInUse, "port " + std::to_string(im.cfg.port) + " is already in use");
        throw Error(ErrorCode::IoError, "cannot bind " + im.cfg.bind_address + ":" + std::to_string(im.cfg.port) + ": " + ec.message());
    }
    im.acceptor->listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        im.acceptor.reset();
        throw Error(ErrorCode::IoError, "listen failed: " + ec.message());
    }
    im.bound_port = im.acceptor->local_endpoint().port();
    im.do_accept();
    im.running = true;
    im.thread = std::thread([&im] { im.ioc.run(); });
    spdlog::info("service listening on {}:{}", im.cfg.bind_address, im.bound_port);
}

void SessionService::stop() {
    auto& im = *impl_;
    if (!im.running) return;
    net::post(im.ioc, [&im] {
        beast::error_code ec;
        if (im.acceptor) im.acceptor->close(ec);
        for (auto& w : im.subscribers)
            if (auto s = w.lock()) s->begin_close(websocket::close_code::going_away);
    });
    // Give close handshakes a moment before tearing the loop down.
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
    while (im.subscriber_total.load() > 0 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    im.ioc.stop();
    if (im.thread.joinable()) im.thread.join();
    im.running = false;
}

std::uint16_t SessionService::port() const noexcept {
    return impl_->bound_port;
}

void SessionService::set_models_loaded(bool loaded) {
    impl_->models_loaded.store(loaded);
}

void SessionService::publish(const BreathEvent& ev) {
    auto& im = *impl_;
    auto line = std::make_shared<const std::string>(event_to_json(ev).dump());
    std::lock_guard lock(im.mutex);
    if (im.session) {
        im.log << *line << '\n';
        im.log.flush();
        im.aggregator.add(ev);
        if (im.compliance) im.compliance->add(ev.t_start, ev.stable);
    }
    // Posted under the lock so wire order equals log order.
    if (im.running)
        net::post(im.ioc, [&im, line] {
            for (auto& w : im.subscribers)
                if (auto s = w.lock()) s->enqueue(line);
        });
}

SessionInfo SessionService::start_session(std::optional<ExerciseScript> script) {
    return impl_->start_session(std::move(script));
}

SessionMetrics SessionService::stop_session() {
    return impl_->stop_session();
}

std::optional<SessionInfo> SessionService::active_session() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->session;
}

std::size_t SessionService::subscriber_count() const {
    return impl_->subscriber_total.load();
}

}  // namespace breathsense
