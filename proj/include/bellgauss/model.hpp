#pragma once

// Parameter types, resource descriptors, and configuration validation shared
// by every computation path.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bellgauss {

inline constexpr double kPi = 3.14159265358979323846;

/// Machine-readable failure categories. Messages are for humans, codes for tools.
enum class ErrorCode {
    DomainError,        // closed form evaluated outside its validity region
    InvalidParameter,   // a type invariant is violated
    NonConvergence,     // adaptive routine ran out of budget
    CutoffTooSmall,     // Fock truncation leaked more than allowed
    NoFeasiblePoint,    // optimizer found nothing to evaluate
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::DomainError: return "domain-error";
        case ErrorCode::InvalidParameter: return "invalid-parameter";
        case ErrorCode::NonConvergence: return "non-convergence";
        case ErrorCode::CutoffTooSmall: return "cutoff-too-small";
        case ErrorCode::NoFeasiblePoint: return "no-feasible-point";
    }
    return "unknown";
}

struct Error {
    ErrorCode code;
    std::string message;
};

/// Value-or-error carrier for evaluations whose failure is an expected outcome
/// (e.g. an infeasible angle set) rather than a bug.
template <class T>
class Result {
public:
    Result(T value) : data_(std::move(value)) {}
    Result(Error err) : data_(std::move(err)) {}

    bool ok() const { return std::holds_alternative<T>(data_); }
    explicit operator bool() const { return ok(); }

    const T& value() const {
        if (!ok()) throw std::runtime_error(std::get<Error>(data_).message);
        return std::get<T>(data_);
    }
    const T& operator*() const { return value(); }
    const Error& error() const { return std::get<Error>(data_); }

private:
    std::variant<T, Error> data_;
};

inline Error domain_error(std::string msg) { return {ErrorCode::DomainError, std::move(msg)}; }

/// Thrown when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Strong parameter types. Constructors check only finiteness; the range
// invariants are reported by validate_config so that a bad configuration
// yields the full list of problems instead of the first one.

struct SqueezingParam {
    double r = 0.0;
};

struct Angle {
    double theta = 0.0;
};

/// The four CHSH settings (theta_A, theta_B, theta'_A, theta'_B).
struct AngleQuad {
    double theta_a = 0.0;
    double theta_b = 0.0;
    double theta_a2 = 0.0;
    double theta_b2 = 0.0;

    bool operator==(const AngleQuad&) const = default;
};

struct Efficiency {
    double eta = 1.0;
};

/// V = 2 nbar + 1; V = 1 is a pure resource.
struct ThermalVariance {
    double v = 1.0;
};

/// Scale d of the displacement amplitude i*theta/d inside the Kerr rotation.
struct KerrDispScale {
    double d = 1.0;
};

/// Phase-space centre of the thermal P-function. Distinct from KerrDispScale
/// even though both are conventionally written d.
struct ThermalCenter {
    double c = 0.0;
};

enum class ResourceKind { SplitSqueezedVacuum, SplitSqueezedThermal, TwoModeSqueezedVacuum };

inline const char* to_string(ResourceKind k) {
    switch (k) {
        case ResourceKind::SplitSqueezedVacuum: return "split-squeezed-vacuum";
        case ResourceKind::SplitSqueezedThermal: return "split-squeezed-thermal";
        case ResourceKind::TwoModeSqueezedVacuum: return "two-mode-squeezed-vacuum";
    }
    return "unknown";
}

inline std::optional<ResourceKind> parse_resource_kind(const std::string& s) {
    if (s == "split-squeezed-vacuum" || s == "ssv") return ResourceKind::SplitSqueezedVacuum;
    if (s == "split-squeezed-thermal" || s == "sst") return ResourceKind::SplitSqueezedThermal;
    if (s == "two-mode-squeezed-vacuum" || s == "tmss") return ResourceKind::TwoModeSqueezedVacuum;
    return std::nullopt;
}

struct ResourceSpec {
    ResourceKind kind = ResourceKind::SplitSqueezedVacuum;
    SqueezingParam r{};
    std::optional<ThermalVariance> v;      // thermal kind only
    std::optional<ThermalCenter> center;   // thermal kind only

    static ResourceSpec split_vacuum(double r) { return {ResourceKind::SplitSqueezedVacuum, {r}, {}, {}}; }
    static ResourceSpec two_mode(double r) { return {ResourceKind::TwoModeSqueezedVacuum, {r}, {}, {}}; }
    static ResourceSpec split_thermal(double r, double v, double center = 0.0) {
        return {ResourceKind::SplitSqueezedThermal, {r}, ThermalVariance{v}, ThermalCenter{center}};
    }
};

enum class RotationKind { Ideal, Physical };

struct RotationSpec {
    RotationKind kind = RotationKind::Ideal;
    std::optional<KerrDispScale> d;   // Physical only

    static RotationSpec ideal() { return {RotationKind::Ideal, {}}; }
    static RotationSpec physical(double d) { return {RotationKind::Physical, KerrDispScale{d}}; }
};

struct ConfigIssue {
    std::string code;      // stable identifier, e.g. "thermal.v.range"
    std::string message;   // human readable
    bool operator==(const ConfigIssue&) const = default;
};

/// Full list of violated invariants; empty means valid. Never throws.
inline std::vector<ConfigIssue> validate_config(const ResourceSpec& spec, const RotationSpec& rot,
                                                Efficiency eta) {
    std::vector<ConfigIssue> issues;
    auto add = [&](const char* code, std::string msg) { issues.push_back({code, std::move(msg)}); };

    if (!std::isfinite(spec.r.r)) add("resource.r.finite", "r must be finite");
    else if (spec.r.r < 0) add("resource.r.range", "r must be >= 0");

    const bool thermal = spec.kind == ResourceKind::SplitSqueezedThermal;
    if (thermal) {
        if (!spec.v) add("thermal.v.missing", "V is required for the squeezed thermal resource");
        else if (!std::isfinite(spec.v->v)) add("thermal.v.finite", "V must be finite");
        else if (spec.v->v < 1.0) add("thermal.v.range", "V < 1");
        if (!spec.center) add("thermal.center.missing", "thermal center is required for the squeezed thermal resource");
        else if (!std::isfinite(spec.center->c)) add("thermal.center.finite", "thermal center must be finite");
    } else {
        if (spec.v) add("thermal.v.unexpected", "V is only meaningful for the squeezed thermal resource");
        if (spec.center) add("thermal.center.unexpected", "thermal center is only meaningful for the squeezed thermal resource");
    }

    if (rot.kind == RotationKind::Physical) {
        if (!rot.d) add("rotation.d.missing", "d is required for physical rotations");
        else if (!std::isfinite(rot.d->d)) add("rotation.d.finite", "d must be finite");
        else if (rot.d->d <= 0) add("rotation.d.range", "d must be positive");
    } else if (rot.d) {
        add("rotation.d.unexpected", "d is only meaningful for physical rotations");
    }

    if (!std::isfinite(eta.eta)) add("eta.finite", "eta must be finite");
    else if (eta.eta <= 0 || eta.eta > 1) add("eta.range", "eta must lie in (0, 1]");

    return issues;
}

}  // namespace bellgauss
