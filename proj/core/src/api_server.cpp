#include "parcelsteer/api_server.hpp"

#include <charconv>
#include <cmath>
#include <functional>

#include <httplib.h>
#include <json.hpp>

#include "parcelsteer/errors.hpp"
#include "parcelsteer/hierarchy_document.hpp"
#include "parcelsteer/slice_renderer.hpp"

namespace parcelsteer {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

struct HttpError {
    int status;
    std::string kind;
    std::string message;
    std::string detail;
};

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::IoFailure:
    case ErrorKind::MalformedHeader:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::UnsupportedDatatype:
    case ErrorKind::NonFiniteSample:
    case ErrorKind::NegativeLabel:
    case ErrorKind::DimsMismatch:
    case ErrorKind::UnknownLabel:
    case ErrorKind::DuplicateLabel:
    case ErrorKind::MalformedMeta:
    case ErrorKind::EmptyAtlas:
    case ErrorKind::MalformedDocument:
        return 400;
    case ErrorKind::UnknownNode:
        return 404;
    case ErrorKind::ThresholdOutOfRange:
    case ErrorKind::InvalidRange:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::InvalidPlane:
        return 422;
    default:
        return 409;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const HttpError& e) {
    send_json(res, e.status, json{{"error_kind", e.kind}, {"message", e.message}, {"detail", e.detail}});
}

// Runs a handler and converts every failure into the error body.
void guarded(httplib::Response& res, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const HttpError& e) {
        send_error(res, e);
    } catch (const SessionError& e) {
        send_error(res, {e.status(), e.kind(), e.what(), {}});
    } catch (const Error& e) {
        send_error(res, {status_for(e.kind()), std::string(to_string(e.kind())), e.what(), e.detail()});
    } catch (const json::exception& e) {
        send_error(res, {400, "BadRequest", "malformed JSON request", e.what()});
    } catch (const std::exception& e) {
        send_error(res, {500, "Internal", e.what(), {}});
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw HttpError{400, "BadRequest", "request body must be a JSON object", {}};
    return j;
}

template <typename T>
T require_field(const json& body, const char* key) {
    if (!body.contains(key)) throw HttpError{400, "BadRequest", std::string("missing field '") + key + "'", {}};
    try {
        return body.at(key).get<T>();
    } catch (const json::exception& e) {
        throw HttpError{400, "BadRequest", std::string("field '") + key + "' has the wrong type", e.what()};
    }
}

double require_threshold(const json& body, const char* key) {
    const double t = require_field<double>(body, key);
    if (!(t >= 0.0 && t <= 2.0))
        throw HttpError{422, "ThresholdOutOfRange", "threshold must lie in [0, 2]", std::to_string(t)};
    return t;
}

int parse_int(const std::string& s, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw HttpError{400, "BadRequest", std::string("bad integer for ") + what, s};
    return value;
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string s = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || std::isnan(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw HttpError{422, "InvalidRange", std::string("query parameter '") + key + "' is not a number", s};
    }
}

json band_json(const BandedTimeCourse& b) {
    return json{{"mean", b.mean}, {"se", b.se}, {"n_members", b.n_members}};
}

json tree_json(const Session::Snapshot& snap) {
    json j = to_document(*snap.hierarchy);
    j["revision"] = snap.revision;
    j["locked"] = snap.locked;
    return j;
}

json delta_json(const Session::SteerResult& r) {
    const Hierarchy& h = *r.snapshot.hierarchy;
    json added = json::array(), updated = json::array();
    for (int id : r.delta.added) added.push_back(node_to_json(h.node(id)));
    for (int id : r.delta.updated) updated.push_back(node_to_json(h.node(id)));
    return json{{"revision", r.snapshot.revision},
                {"removed", r.delta.removed},
                {"added", added},
                {"updated", updated},
                {"leaf_count", r.delta.leaf_count},
                {"notice", r.delta.notice ? json(*r.delta.notice) : json(nullptr)},
                {"op", op_to_json(h.op_log().back())},
                {"locked", r.snapshot.locked}};
}

} // namespace

ApiServer::ApiServer(ServerConfig config) : config_(std::move(config)), http_(std::make_unique<httplib::Server>()) {
    register_routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
    if (config_.port == 0) {
        const int port = http_->bind_to_any_port(config_.host);
        if (port < 0) throw Error(ErrorKind::IoFailure, "cannot bind", config_.host);
        config_.port = port;
        return port;
    }
    if (!http_->bind_to_port(config_.host, config_.port))
        throw Error(ErrorKind::IoFailure, "cannot bind", config_.host + ":" + std::to_string(config_.port));
    return config_.port;
}

void ApiServer::listen() { http_->listen_after_bind(); }
void ApiServer::stop() {
    if (http_) http_->stop();
}
bool ApiServer::running() const { return http_->is_running(); }

std::filesystem::path ApiServer::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_relative() && !config_.data_root.empty()) return config_.data_root / p;
    return p;
}

std::string ApiServer::create_session(const std::filesystem::path& scan, const std::filesystem::path& atlas,
                                      const std::filesystem::path& meta) {
    auto dataset = Dataset::load(scan, atlas, meta);
    const std::string id = "s" + std::to_string(next_session_++);
    auto session = std::make_shared<Session>(id, std::move(dataset));
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, std::move(session));
    return id;
}

std::shared_ptr<Session> ApiServer::session(const std::string& id) const {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Session> ApiServer::require_session(const std::string& id) const {
    auto s = session(id);
    if (!s) throw HttpError{404, "SessionNotFound", "no such session", id};
    return s;
}

void ApiServer::register_routes() {
    auto& srv = *http_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, json{{"status", "ok"}});
    });

    srv.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            const std::string id = create_session(resolve(require_field<std::string>(body, "scan_path")),
                                                  resolve(require_field<std::string>(body, "atlas_path")),
                                                  resolve(require_field<std::string>(body, "meta_path")));
            const Dataset& ds = session(id)->dataset();
            send_json(res, 200,
                      json{{"session_id", id},
                           {"n_supervoxels", ds.supervoxels->size()},
                           {"nt", ds.nt},
                           {"dims", {ds.dims.nx, ds.dims.ny, ds.dims.nz}}});
        });
    });

    srv.Delete(R"(/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            require_session(req.matches[1]);
            std::lock_guard lock(sessions_mutex_);
            sessions_.erase(req.matches[1]);
            send_json(res, 200, json{{"deleted", std::string(req.matches[1])}});
        });
    });

    srv.Post(R"(/session/([^/]+)/hierarchy)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            const double t = require_threshold(body, "threshold");
            const bool confirm = body.value("confirm", false);
            send_json(res, 200, tree_json(s->initialize(t, confirm)));
        });
    });

    srv.Get(R"(/session/([^/]+)/tree)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto snap = require_session(req.matches[1])->snapshot();
            if (!snap.hierarchy) throw HttpError{409, "NoHierarchy", "initialize a hierarchy first", {}};
            send_json(res, 200, tree_json(snap));
        });
    });

    srv.Get(R"(/session/([^/]+)/node/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const int node_id = parse_int(req.matches[2], "node id");
            const auto snap = s->snapshot();
            if (!snap.hierarchy) throw HttpError{409, "NoHierarchy", "initialize a hierarchy first", {}};
            const Hierarchy& h = *snap.hierarchy;
            const ParcelNode* n = h.find(node_id);
            if (!n) throw HttpError{404, "UnknownNode", "no such node", std::to_string(node_id)};

            const auto members = h.members_of(node_id);
            std::vector<int> degenerate_members;
            for (int m : members)
                if (h.supervoxels().correlations().degenerate[h.supervoxels().index_of(m)]) degenerate_members.push_back(m);

            const auto fc = s->fc(snap);
            std::vector<double> row(fc->size());
            if (n->kind == NodeKind::Leaf) {
                const auto pos = static_cast<std::size_t>(
                    std::find(fc->parcel_ids.begin(), fc->parcel_ids.end(), node_id) - fc->parcel_ids.begin());
                for (std::size_t j = 0; j < fc->size(); ++j) row[j] = fc->at(pos, j);
            } else {
                const TimeCourse course = h.node_course(node_id);
                for (std::size_t j = 0; j < fc->size(); ++j)
                    row[j] = correlate(course.samples, h.node_course(fc->parcel_ids[j]).samples).r;
            }
            send_json(res, 200,
                      json{{"revision", snap.revision},
                           {"node", node_to_json(*n)},
                           {"banded", band_json(h.node_band(node_id))},
                           {"homogeneity", n->homogeneity},
                           {"degenerate", n->degenerate},
                           {"members", members},
                           {"degenerate_members", degenerate_members},
                           {"fc_row", {{"parcel_ids", fc->parcel_ids}, {"r", row}}}});
        });
    });

    srv.Post(R"(/session/([^/]+)/merge)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            const auto r = s->merge(require_field<int>(body, "target_id"), require_field<int>(body, "source_id"));
            send_json(res, 200, delta_json(r));
        });
    });

    srv.Post(R"(/session/([^/]+)/collapse)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            send_json(res, 200, delta_json(s->collapse(require_field<int>(body, "node_id"))));
        });
    });

    srv.Post(R"(/session/([^/]+)/expand)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            const int node_id = require_field<int>(body, "node_id");
            const double t = require_threshold(body, "threshold");
            send_json(res, 200, delta_json(s->expand(node_id, t)));
        });
    });

    srv.Post(R"(/session/([^/]+)/(lock|unlock))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            const int node_id = require_field<int>(body, "node_id");
            const auto snap = req.matches[2] == "lock" ? s->lock(node_id) : s->unlock(node_id);
            send_json(res, 200, json{{"revision", snap.revision}, {"locked", snap.locked}});
        });
    });

    srv.Get(R"(/session/([^/]+)/fc)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const double lo = query_double(req, "lo", 0.0);
            const double hi = query_double(req, "hi", 1.0);
            if (!(lo <= hi)) throw HttpError{422, "InvalidRange", "filter range requires lo <= hi", {}};
            const auto snap = s->snapshot();
            const auto fc = s->fc(snap);
            const std::size_t k = fc->size();
            const auto parcels = snap.hierarchy->current_parcellation();

            json matrix = json::array(), bars = json::array(), networks = json::array(), hemis = json::array();
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<double> row(k), bar(k);
                for (std::size_t j = 0; j < k; ++j) {
                    row[j] = fc->at(i, j);
                    bar[j] = std::abs(row[j]);
                }
                matrix.push_back(row);
                bars.push_back(bar);
                networks.push_back(parcels[i].network_id);
                hemis.push_back(std::string(to_string(parcels[i].hemisphere)));
            }
            json chords = json::array();
            for (const auto& c : fc_filter(*fc, lo, hi))
                chords.push_back({{"i", c.i}, {"j", c.j}, {"r", c.r}});
            send_json(res, 200,
                      json{{"revision", snap.revision},
                           {"parcel_ids", fc->parcel_ids},
                           {"network_ids", networks},
                           {"hemispheres", hemis},
                           {"matrix", matrix},
                           {"degenerate", fc->corr.degenerate},
                           {"lo", lo},
                           {"hi", hi},
                           {"chords", chords},
                           {"bars", bars}});
        });
    });

    srv.Get(R"(/session/([^/]+)/slice/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const Plane plane = parse_plane(req.matches[2].str());
            const int index = parse_int(req.matches[3], "slice index");
            std::optional<int> highlight;
            if (req.has_param("highlight") && !req.get_param_value("highlight").empty())
                highlight = parse_int(req.get_param_value("highlight"), "highlight");
            const auto snap = s->snapshot();
            if (!snap.hierarchy) throw HttpError{409, "NoHierarchy", "initialize a hierarchy first", {}};
            const Dataset& ds = s->dataset();
            const auto parcels = snap.hierarchy->current_parcellation();
            const SliceOverlay ov = render_slice(parcels, ds.atlas, plane, index, highlight);
            const auto underlay = slice_values(ds.mean_image, ds.dims, plane, index);

            json contours = json::array();
            for (const auto& c : ov.contours) {
                json pts = json::array();
                for (const auto& p : c.points) pts.push_back({p.u, p.v});
                contours.push_back({{"leaf_id", c.leaf_id},
                                    {"network_id", c.network_id},
                                    {"hole", c.hole},
                                    {"highlighted", c.highlighted},
                                    {"points", pts}});
            }
            send_json(res, 200,
                      json{{"revision", snap.revision},
                           {"plane", std::string(to_string(ov.plane))},
                           {"index", ov.index},
                           {"width", ov.label_image.width},
                           {"height", ov.label_image.height},
                           {"labels", ov.label_image.labels},
                           {"contours", contours},
                           {"highlight", ov.highlight ? json(*ov.highlight) : json(nullptr)},
                           {"underlay", {{"width", ov.label_image.width}, {"height", ov.label_image.height}, {"values", underlay}}}});
        });
    });

    srv.Get(R"(/session/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto snap = require_session(req.matches[1])->snapshot();
            if (!snap.hierarchy) throw HttpError{409, "NoHierarchy", "initialize a hierarchy first", {}};
            send_json(res, 200,
                      json{{"revision", snap.revision},
                           {"document", to_document(*snap.hierarchy)},
                           {"label_volume", "/session/" + std::string(req.matches[1]) + "/export/labels.nii"}});
        });
    });

    srv.Get(R"(/session/([^/]+)/export/labels\.nii)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const auto snap = s->snapshot();
            if (!snap.hierarchy) throw HttpError{409, "NoHierarchy", "initialize a hierarchy first", {}};
            const std::string bytes = encode_label_volume(export_labels(*snap.hierarchy, s->dataset().atlas));
            res.set_header("Content-Disposition", "attachment; filename=\"parcellation.nii\"");
            res.set_content(bytes, "application/octet-stream");
            res.status = 200;
        });
    });

    srv.Post(R"(/session/([^/]+)/replay)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto s = require_session(req.matches[1]);
            const json body = parse_body(req);
            const json doc = require_field<json>(body, "document");
            send_json(res, 200, tree_json(s->replay(doc, body.value("confirm", false))));
        });
    });
}

} // namespace parcelsteer
