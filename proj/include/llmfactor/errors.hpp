#pragma once

#include <stdexcept>
#include <string>

namespace llmfactor {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fewer prices/trading days than an operation requires.
class InsufficientHistory : public Error {
public:
    using Error::Error;
};

/// Metrics requested over an empty sample.
class EmptyEvaluation : public Error {
public:
    using Error::Error;
};

/// Stock registry CSV malformed (message carries the line number).
class RegistryFormatError : public Error {
public:
    using Error::Error;
};

/// Dataset file unreadable or structurally broken.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Price row out of order / duplicated for a stock.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Prompt template missing a required placeholder binding.
class TemplateError : public Error {
public:
    using Error::Error;
};

/// LLM backend failed after exhausting retries (or replay miss).
class BackendError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (experiment config, mock rules, lexicons).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Timeline export matched no records.
class EmptyTimeline : public Error {
public:
    using Error::Error;
};

}  // namespace llmfactor
