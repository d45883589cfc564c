#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace polyvector {

/// Failure classes surfaced to callers; the CLI maps each class to a
/// distinct exit code.
enum class ErrorKind {
    Config,     // bad option, policy, or method id
    Parse,      // malformed corpus or suite input
    Structure,  // violated tree/label/index invariant
    Provider,   // embedding backend failure after retries
    Io,         // filesystem or serialization failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    static Error config(std::string m) { return {ErrorKind::Config, std::move(m)}; }
    static Error parse(std::string m) { return {ErrorKind::Parse, std::move(m)}; }
    static Error structure(std::string m) { return {ErrorKind::Structure, std::move(m)}; }
    static Error provider(std::string m) { return {ErrorKind::Provider, std::move(m)}; }
    static Error io(std::string m) { return {ErrorKind::Io, std::move(m)}; }

private:
    ErrorKind kind_;
};

}  // namespace polyvector
