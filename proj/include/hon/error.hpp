#pragma once

#include <stdexcept>
#include <string>

namespace hon {

// Base for every error thrown by the library. `code()` is a stable token that
// callers (CLI, gateway, bindings) can switch on or put on the wire.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define HON_DEFINE_ERROR(Name)                                                 \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}  \
    }

HON_DEFINE_ERROR(InvalidConfig);
HON_DEFINE_ERROR(IllegalTransition);
HON_DEFINE_ERROR(DuplicateGuess);
HON_DEFINE_ERROR(BotCannotGuess);
HON_DEFINE_ERROR(WrongPhase);
HON_DEFINE_ERROR(AlreadyQueued);
HON_DEFINE_ERROR(EmptyCatalog);
HON_DEFINE_ERROR(NonAlternatingTranscript);
HON_DEFINE_ERROR(EmptyCompletion);
HON_DEFINE_ERROR(InvalidCounts);
HON_DEFINE_ERROR(EmptyCorpus);
HON_DEFINE_ERROR(InvalidPlantedSpec);
HON_DEFINE_ERROR(StorageFull);

#undef HON_DEFINE_ERROR

class BackendUnavailable : public Error {
public:
    BackendUnavailable(std::string backend, const std::string& message)
        : Error("BackendUnavailable", backend + ": " + message), backend_(std::move(backend)) {}

    const std::string& backend() const noexcept { return backend_; }

private:
    std::string backend_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("ParseError", "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace hon
