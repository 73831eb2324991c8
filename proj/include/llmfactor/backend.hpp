#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmfactor/domain.hpp"

namespace llmfactor {

// Instruction prepended to every chat completion.
inline constexpr std::string_view kSystemPreamble = "You are a financial analysis assistant.";

// 64-bit FNV-1a; `seed` allows hashing several pieces in sequence.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex64(std::uint64_t value);

// Hash identifying a request for caching and replay: system preamble and
// user prompt, separated so concatenation ambiguity cannot collide.
std::uint64_t prompt_hash(std::string_view system_preamble, std::string_view user_prompt);

enum class BackendKind { Remote, Mock, Replay };

struct BackendConfig {
    BackendKind kind = BackendKind::Mock;
    std::string model_id = "gpt-3.5-turbo-1106";
    std::string endpoint_url;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 30.0;
    int max_retries = 3;
    int max_concurrent_requests = 5;
    double temperature = 0.0;
    // Base delay for exponential retry backoff; tests shrink it.
    int backoff_base_ms = 1000;
};

struct CompletionResult {
    std::string text;
    double latency_ms = 0.0;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int attempt = 1;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual CompletionResult complete(std::string_view system_preamble,
                                      std::string_view user_prompt) = 0;
    virtual const std::string& model_id() const = 0;
};

// Deterministic offline backend. Rules are ordered (pattern, responder)
// pairs; a rule fires when the prompt contains its pattern, and the empty
// pattern matches everything, serving as the required default.
class MockBackend final : public LlmBackend {
public:
    using Responder = std::function<std::string(std::string_view prompt)>;
    using Rule = std::pair<std::string, Responder>;

    MockBackend(std::vector<Rule> rules, std::string model_id);

    CompletionResult complete(std::string_view system_preamble,
                              std::string_view user_prompt) override;
    const std::string& model_id() const override { return model_id_; }

private:
    std::vector<Rule> rules_;
    std::string model_id_;
};

std::shared_ptr<LlmBackend> mock_from_rules(std::vector<MockBackend::Rule> rules,
                                            std::string model_id = "offline-mock");

// Preset mock whose prediction follows recent momentum: the price prompt is
// answered "rise" when at least `rise_threshold` of its movement lines rose,
// otherwise "fall". Relation and factor prompts get fixed plausible answers.
std::shared_ptr<LlmBackend> momentum_mock(Language language,
                                          int rise_threshold = 3,
                                          std::string model_id = "offline-mock");

// Chat-completion client over HTTP. Shared by all workers; an admission
// semaphore keeps at most max_concurrent_requests in flight.
class RemoteBackend final : public LlmBackend {
public:
    explicit RemoteBackend(BackendConfig config);
    CompletionResult complete(std::string_view system_preamble,
                              std::string_view user_prompt) override;
    const std::string& model_id() const override { return config_.model_id; }

private:
    struct Semaphore;
    void backoff_sleep(int attempt);

    BackendConfig config_;
    std::string base_url_;
    std::string path_;
    std::string api_key_;
    std::shared_ptr<Semaphore> slots_;
    std::mutex rng_mutex_;
    std::uint64_t rng_state_;
};

// Append-only store of responses keyed by (model_id, prompt hash), persisted
// as JSONL so a finished run can be replayed without network access.
class ResponseCache {
public:
    // Loads existing entries from log_path if present; new entries are
    // appended to the same file as they arrive.
    explicit ResponseCache(std::filesystem::path log_path);

    std::optional<std::string> lookup(const std::string& model_id,
                                      std::uint64_t hash) const;
    void store(const std::string& model_id, std::uint64_t hash, const std::string& response);
    std::size_t size() const;
    const std::filesystem::path& log_path() const { return log_path_; }

private:
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::uint64_t>, std::string> entries_;
    std::filesystem::path log_path_;
    std::ofstream sink_;
};

// Wraps a backend with the response cache. In replay mode the inner backend
// is never consulted and a cache miss is an error, which makes a recorded
// run reproducible offline.
class CachedBackend final : public LlmBackend {
public:
    // replay_model_id selects whose cache entries to serve when no inner
    // backend exists (pure replay); ignored otherwise.
    CachedBackend(std::shared_ptr<LlmBackend> inner,
                  std::shared_ptr<ResponseCache> cache,
                  bool replay_only = false,
                  std::string replay_model_id = {});

    CompletionResult complete(std::string_view system_preamble,
                              std::string_view user_prompt) override;
    const std::string& model_id() const override;

private:
    std::shared_ptr<LlmBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    bool replay_only_;
    std::string replay_model_id_;
};

}  // namespace llmfactor
