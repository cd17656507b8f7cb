#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "parcelsteer/session.hpp"

namespace httplib {
class Server;
}

namespace parcelsteer {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;               // 0 binds an ephemeral port
    std::filesystem::path data_root;  // relative dataset paths resolve here
};

/// HTTP/1.1 JSON service over per-session steering state.
///
/// Errors use the body {error_kind, message, detail}: 400 for unloadable
/// datasets and malformed requests, 404 for unknown sessions/nodes, 409 for
/// engine precondition failures, 422 for out-of-range parameters.
class ApiServer {
public:
    explicit ApiServer(ServerConfig config);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the socket; returns the bound port.
    int bind();
    /// Serves until stop(); blocks.
    void listen();
    void stop();
    bool running() const;

    /// Loads a dataset into a new session without going through HTTP.
    std::string create_session(const std::filesystem::path& scan, const std::filesystem::path& atlas,
                               const std::filesystem::path& meta);
    /// Null when no session has this id.
    std::shared_ptr<Session> session(const std::string& id) const;

private:
    void register_routes();
    std::shared_ptr<Session> require_session(const std::string& id) const;
    std::filesystem::path resolve(const std::string& path) const;

    ServerConfig config_;
    std::unique_ptr<httplib::Server> http_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::atomic<std::uint64_t> next_session_{1};
};

} // namespace parcelsteer
