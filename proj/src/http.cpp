// HTTP-backed context provider and bot backend. Both use plain blocking
// clients with the configured timeouts.
#include <cstdlib>

#include "hon/bot.hpp"
#include "hon/context.hpp"
#include "hon/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace hon {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

void set_timeouts(httplib::Client& client, double timeout_s) {
    const auto sec = static_cast<time_t>(timeout_s);
    const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
}

const json& at_pointer(const json& j, const std::string& pointer) { return j.at(json::json_pointer(pointer)); }

}  // namespace

HttpProvider::HttpProvider(HttpFeedConfig config, double timeout_s)
    : config_(std::move(config)), timeout_s_(timeout_s) {
    if (!(timeout_s_ > 0.0)) throw InvalidConfig("context provider timeout must be > 0");
}

std::string HttpProvider::get(const std::string& path_template, const Location& where) {
    std::string path = path_template;
    for (auto pos = path.find("{city}"); pos != std::string::npos; pos = path.find("{city}"))
        path.replace(pos, 6, url_encode(where.city));
    httplib::Client client(config_.base_url);
    set_timeouts(client, timeout_s_);
    auto res = client.Get(path);
    if (!res) throw std::runtime_error("request to " + config_.base_url + path + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("HTTP " + std::to_string(res->status) + " from " + path);
    return res->body;
}

Weather HttpProvider::fetch_weather(const Location& where) {
    const json j = json::parse(get(config_.weather_path, where));
    auto field = [&](const char* name) -> const json& { return at_pointer(j, config_.weather_fields.at(name)); };
    Weather w;
    w.temp_f = field("temp_f").get<int>();
    w.temp_c = field("temp_c").get<int>();
    w.wind_dir = field("wind_dir").get<std::string>();
    w.wind_mph = field("wind_mph").get<int>();
    w.wind_kmh = field("wind_kmh").get<int>();
    w.humidity_pct = field("humidity_pct").get<int>();
    return w;
}

std::vector<Story> HttpProvider::fetch_stories(const Location& where) {
    const json j = json::parse(get(config_.news_path, where));
    std::vector<Story> out;
    for (const auto& item : at_pointer(j, config_.stories_list))
        out.push_back({at_pointer(item, config_.story_headline).get<std::string>(),
                       at_pointer(item, config_.story_age).get<std::string>()});
    return out;
}

std::vector<Tweet> HttpProvider::fetch_tweets(const Location& where) {
    const json j = json::parse(get(config_.tweets_path, where));
    std::vector<Tweet> out;
    for (const auto& item : at_pointer(j, config_.tweets_list))
        out.push_back({at_pointer(item, config_.tweet_text).get<std::string>(),
                       at_pointer(item, config_.tweet_author).get<std::string>(),
                       at_pointer(item, config_.tweet_age).get<std::string>()});
    return out;
}

HttpBackend::HttpBackend(HttpBackendConfig config, std::string name)
    : config_(std::move(config)), name_(std::move(name)) {
    if (config_.endpoint.empty()) throw InvalidConfig("http backend " + name_ + " needs an endpoint");
}

std::string HttpBackend::complete(const std::string& prompt, std::span<const std::string> stop_markers,
                                  std::size_t max_chars) {
    const auto url = split_url(config_.endpoint);
    httplib::Client client(url.origin);
    set_timeouts(client, config_.timeout_s);
    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        const char* token = std::getenv(config_.auth_env.c_str());
        if (!token) throw BackendUnavailable(name_, "credential variable " + config_.auth_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    json body;
    body[config_.prompt_field] = prompt;
    body[config_.stop_field] = std::vector<std::string>(stop_markers.begin(), stop_markers.end());
    body[config_.max_field] = max_chars;
    if (!config_.model.empty()) body[config_.model_field] = config_.model;
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) throw BackendUnavailable(name_, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendUnavailable(name_, "HTTP " + std::to_string(res->status));
    try {
        return at_pointer(json::parse(res->body), config_.response_pointer).get<std::string>();
    } catch (const json::exception& e) {
        throw BackendUnavailable(name_, std::string("unexpected response: ") + e.what());
    }
}

}  // namespace hon
