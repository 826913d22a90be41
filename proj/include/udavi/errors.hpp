#pragma once

#include <stdexcept>
#include <string>

namespace udavi {

// Error categories map onto the CLI exit codes: config=2, numeric=3, io=4.
enum class ErrorKind { Config, Numeric, Io, Logic };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::Config: return 2;
            case ErrorKind::Numeric: return 3;
            case ErrorKind::Io: return 4;
            case ErrorKind::Logic: return 1;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_config(const std::string& msg) { throw Error(ErrorKind::Config, msg); }
[[noreturn]] inline void fail_numeric(const std::string& msg) { throw Error(ErrorKind::Numeric, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorKind::Io, msg); }
[[noreturn]] inline void fail_logic(const std::string& msg) { throw Error(ErrorKind::Logic, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

}  // namespace udavi
