#ifndef LESIONUNC_ERROR_HPP
#define LESIONUNC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lunc {

enum class ErrorCode {
    // I/O
    IoFailure,
    // NIfTI reader/writer
    CorruptHeader,
    UnsupportedDatatype,
    TruncatedData,
    LabelOverflow,
    InvalidDims,
    // CSV tables
    RaggedRow,
    NonNumericCell,
    DuplicateColumn,
    // numeric operations
    DimMismatch,
    BothEmpty,
    NonFinite,
    ConstantTarget,
    TooFewGroups,
    SpecInfeasible,
    // argument validation
    InvalidArgument,
    InvalidVolume,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace lunc

#endif
