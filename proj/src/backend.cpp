#include "llmfactor/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// Keeps backoff delays bounded even with many retries configured.
constexpr int kBackoffCapMs = 30000;

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= kFnvPrime;
    }
    return hash;
}

std::string to_hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::uint64_t prompt_hash(std::string_view system_preamble, std::string_view user_prompt) {
    std::uint64_t hash = fnv1a64(system_preamble);
    hash = fnv1a64(std::string_view("\x1f", 1), hash);
    return fnv1a64(user_prompt, hash);
}

// ---------------------------------------------------------------------------
// Mock backend

MockBackend::MockBackend(std::vector<Rule> rules, std::string model_id)
    : rules_(std::move(rules)), model_id_(std::move(model_id)) {
    bool has_default = false;
    for (const auto& [pattern, responder] : rules_) {
        if (!responder) throw ConfigError("mock rule has no responder");
        if (pattern.empty()) has_default = true;
    }
    if (!has_default)
        throw ConfigError("mock rule set has no default rule (empty pattern)");
}

CompletionResult MockBackend::complete(std::string_view /*system_preamble*/,
                                       std::string_view user_prompt) {
    for (const auto& [pattern, responder] : rules_) {
        if (pattern.empty() || user_prompt.find(pattern) != std::string_view::npos) {
            CompletionResult result;
            result.text = responder(user_prompt);
            result.attempt = 1;
            return result;
        }
    }
    // Unreachable: construction guarantees a default rule.
    throw ConfigError("mock rule set matched nothing");
}

std::shared_ptr<LlmBackend> mock_from_rules(std::vector<MockBackend::Rule> rules,
                                            std::string model_id) {
    return std::make_shared<MockBackend>(std::move(rules), std::move(model_id));
}

std::shared_ptr<LlmBackend> momentum_mock(Language language,
                                          int rise_threshold,
                                          std::string model_id) {
    const bool en = language == Language::EN;

    auto count_occurrences = [](std::string_view text, std::string_view needle) {
        int n = 0;
        std::size_t pos = 0;
        while ((pos = text.find(needle, pos)) != std::string_view::npos) {
            ++n;
            pos += needle.size();
        }
        return n;
    };

    const std::string relation_answer =
        en ? "They are most likely in a competitor relationship."
           : "它们最可能是竞争关系。";
    const std::string factor_answer =
        en ? "1. Market sentiment\n2. Sector momentum\n3. Earnings outlook\n"
             "4. Analyst coverage\n5. Trading volume"
           : "1、市场情绪\n2、行业动量\n3、盈利前景\n4、分析师关注\n5、成交量";
    const std::string rise_line = en ? " rose." : "股价上涨。";
    const std::string rise_answer =
        en ? "The stock price will rise. Recent movements show positive momentum."
           : "该股票的股价将上涨。近期走势显示动能为正。";
    const std::string fall_answer =
        en ? "The stock price will fall. Recent movements show negative momentum."
           : "该股票的股价将下跌。近期走势显示动能为负。";

    std::vector<MockBackend::Rule> rules;
    auto fixed = [](std::string answer) {
        return [answer = std::move(answer)](std::string_view) { return answer; };
    };
    // The relation instruction shares "fill in the blank" with the prediction
    // preamble, so the pattern includes its unique tail.
    rules.emplace_back(en ? "fill in the blank and return a complete sentence"
                          : "请填空并返回完整的句子",
                       fixed(relation_answer));
    for (const char* stem : en ? std::vector<const char*>{"extract the top",
                                                          "identify the primary top",
                                                          "pinpoint the top"}
                               : std::vector<const char*>{"提取可能影响", "请识别出影响",
                                                          "找出影响"})
        rules.emplace_back(stem, fixed(factor_answer));
    rules.emplace_back("", [=](std::string_view prompt) {
        return count_occurrences(prompt, rise_line) >= rise_threshold ? rise_answer
                                                                      : fall_answer;
    });
    return std::make_shared<MockBackend>(std::move(rules), std::move(model_id));
}

// ---------------------------------------------------------------------------
// Remote backend

struct RemoteBackend::Semaphore {
    explicit Semaphore(int count) : sem(count) {}
    std::counting_semaphore<4096> sem;
};

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.max_concurrent_requests < 1)
        throw ConfigError("max_concurrent_requests must be at least 1");
    if (config_.max_concurrent_requests > 4096)
        throw ConfigError("max_concurrent_requests must be at most 4096");
    if (config_.timeout_s <= 0) throw ConfigError("timeout_s must be positive");
    if (config_.endpoint_url.empty())
        throw ConfigError("remote backend requires an endpoint URL");

    const std::size_t scheme = config_.endpoint_url.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("endpoint URL must include a scheme: " + config_.endpoint_url);
    const std::size_t slash = config_.endpoint_url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base_url_ = config_.endpoint_url;
        path_ = "/";
    } else {
        base_url_ = config_.endpoint_url.substr(0, slash);
        path_ = config_.endpoint_url.substr(slash);
    }

    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    slots_ = std::make_shared<Semaphore>(config_.max_concurrent_requests);
    rng_state_ = std::chrono::steady_clock::now().time_since_epoch().count() | 1;
}

void RemoteBackend::backoff_sleep(int attempt) {
    long long delay = config_.backoff_base_ms;
    for (int i = 1; i < attempt && delay < kBackoffCapMs; ++i) delay *= 2;
    delay = std::min<long long>(delay, kBackoffCapMs);

    long long jitter = 0;
    if (delay > 1) {
        std::lock_guard lock(rng_mutex_);
        // splitmix64 step; the jitter only needs to decorrelate clients.
        rng_state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = rng_state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        jitter = static_cast<long long>((z ^ (z >> 31)) % (delay / 2 + 1));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay + jitter));
}

CompletionResult RemoteBackend::complete(std::string_view system_preamble,
                                         std::string_view user_prompt) {
    if (user_prompt.empty()) throw ConfigError("refusing to send an empty prompt");

    const std::string body = json{
        {"model", config_.model_id},
        {"messages",
         json::array({json{{"role", "system"}, {"content", system_preamble}},
                      json{{"role", "user"}, {"content", user_prompt}}})},
        {"temperature", config_.temperature},
    }.dump();

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const int max_attempts = config_.max_retries + 1;
    std::string last_failure;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        const auto started = std::chrono::steady_clock::now();
        httplib::Result res;
        {
            slots_->sem.acquire();
            // A client per call: httplib clients are not safe to share
            // across threads.
            httplib::Client client(base_url_);
            const auto seconds = static_cast<time_t>(config_.timeout_s);
            const auto micros = static_cast<time_t>(
                (config_.timeout_s - static_cast<double>(seconds)) * 1e6);
            client.set_connection_timeout(seconds, micros);
            client.set_read_timeout(seconds, micros);
            client.set_write_timeout(seconds, micros);
            res = client.Post(path_, headers, body, "application/json");
            slots_->sem.release();
        }
        const double latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                      started)
                .count();

        if (res && res->status == 200) {
            try {
                const json reply = json::parse(res->body);
                CompletionResult result;
                result.text = reply.at("choices").at(0).at("message").at("content");
                if (reply.contains("usage")) {
                    result.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
                    result.completion_tokens = reply["usage"].value("completion_tokens", 0);
                }
                result.latency_ms = latency_ms;
                result.attempt = attempt;
                return result;
            } catch (const json::exception& e) {
                throw BackendError("malformed completion response: " + std::string(e.what()));
            }
        }

        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
        } else {
            throw BackendError("chat completion rejected with HTTP " +
                               std::to_string(res->status));
        }
        if (attempt < max_attempts) backoff_sleep(attempt);
    }
    throw BackendError("chat completion failed after " + std::to_string(max_attempts) +
                       " attempts (" + last_failure + ")");
}

// ---------------------------------------------------------------------------
// Response cache

ResponseCache::ResponseCache(std::filesystem::path log_path)
    : log_path_(std::move(log_path)) {
    std::ifstream in(log_path_);
    if (in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json row = json::parse(line, nullptr, false);
            if (row.is_discarded() || !row.contains("prompt_hash") ||
                !row.contains("model_id") || !row.contains("response"))
                throw IngestError("malformed replay log line in " + log_path_.string());
            const std::uint64_t hash =
                std::stoull(row["prompt_hash"].get<std::string>(), nullptr, 16);
            entries_[{row["model_id"].get<std::string>(), hash}] =
                row["response"].get<std::string>();
        }
    }
    sink_.open(log_path_, std::ios::app);
    if (!sink_) throw IngestError("cannot open replay log for append: " + log_path_.string());
}

std::optional<std::string> ResponseCache::lookup(const std::string& model_id,
                                                 std::uint64_t hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({model_id, hash});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& model_id,
                          std::uint64_t hash,
                          const std::string& response) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = entries_.try_emplace({model_id, hash}, response);
    if (!inserted) return;
    const json row = {
        {"prompt_hash", to_hex64(hash)},
        {"model_id", model_id},
        {"response", response},
    };
    sink_ << row.dump() << '\n';
    sink_.flush();
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---------------------------------------------------------------------------
// Caching wrapper

CachedBackend::CachedBackend(std::shared_ptr<LlmBackend> inner,
                             std::shared_ptr<ResponseCache> cache,
                             bool replay_only,
                             std::string replay_model_id)
    : inner_(std::move(inner)),
      cache_(std::move(cache)),
      replay_only_(replay_only),
      replay_model_id_(std::move(replay_model_id)) {
    if (!cache_) throw ConfigError("cached backend requires a response cache");
    if (!replay_only_ && !inner_)
        throw ConfigError("cached backend requires an inner backend unless replaying");
    if (!inner_ && replay_model_id_.empty())
        throw ConfigError("pure replay requires the model id whose responses to serve");
}

const std::string& CachedBackend::model_id() const {
    return inner_ ? inner_->model_id() : replay_model_id_;
}

CompletionResult CachedBackend::complete(std::string_view system_preamble,
                                         std::string_view user_prompt) {
    const std::uint64_t hash = prompt_hash(system_preamble, user_prompt);
    if (auto cached = cache_->lookup(model_id(), hash)) {
        CompletionResult result;
        result.text = std::move(*cached);
        result.attempt = 1;
        return result;
    }
    if (replay_only_)
        throw BackendError("replay cache has no response for prompt hash " + to_hex64(hash));
    CompletionResult result = inner_->complete(system_preamble, user_prompt);
    cache_->store(inner_->model_id(), hash, result.text);
    return result;
}

}  // namespace llmfactor
