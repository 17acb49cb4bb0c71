#ifndef MGTKIT_ERRORS_HPP
#define MGTKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mgtkit {

// Error taxonomy shared by the library and the CLI. The CLI maps kinds to
// exit codes: validation -> 2, data -> 3, conflict -> 4.
enum class ErrorKind { validation, data, conflict };

class ToolError : public std::runtime_error {
public:
    ToolError(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }
    int exit_code() const {
        switch (kind_) {
            case ErrorKind::validation: return 2;
            case ErrorKind::data: return 3;
            case ErrorKind::conflict: return 4;
        }
        return 3;
    }

private:
    ErrorKind kind_;
};

// Malformed input syntax (bad column counts, bad numbers); carries line info
// in the message.
class ParseError : public ToolError {
public:
    explicit ParseError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

// Well-formed input violating a structural invariant (cyclic trees, missing
// roots, duplicate ids).
class StructuralError : public ToolError {
public:
    explicit StructuralError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class MetadataError : public ToolError {
public:
    explicit MetadataError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class PairingError : public ToolError {
public:
    explicit PairingError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class TrainingError : public ToolError {
public:
    explicit TrainingError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class CapacityError : public ToolError {
public:
    explicit CapacityError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class SelectionError : public ToolError {
public:
    explicit SelectionError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class MetricError : public ToolError {
public:
    explicit MetricError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class SingularityError : public ToolError {
public:
    explicit SingularityError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

class IoError : public ToolError {
public:
    explicit IoError(const std::string& msg) : ToolError(ErrorKind::data, msg) {}
};

// Mismatched feature registries or artifact schema versions.
class SchemaError : public ToolError {
public:
    explicit SchemaError(const std::string& msg) : ToolError(ErrorKind::validation, msg) {}
};

class TemplateError : public ToolError {
public:
    explicit TemplateError(const std::string& msg) : ToolError(ErrorKind::validation, msg) {}
};

class ConfigError : public ToolError {
public:
    explicit ConfigError(const std::string& msg) : ToolError(ErrorKind::validation, msg) {}
};

class ConflictError : public ToolError {
public:
    explicit ConflictError(const std::string& msg) : ToolError(ErrorKind::conflict, msg) {}
};

} // namespace mgtkit

#endif
