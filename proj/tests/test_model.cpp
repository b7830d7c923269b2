#include <catch_amalgamated.hpp>

#include <algorithm>
#include <limits>

#include "bellgauss/model.hpp"

using namespace bellgauss;

namespace {

bool has(const std::vector<ConfigIssue>& v, const std::string& code) {
    return std::any_of(v.begin(), v.end(), [&](const ConfigIssue& i) { return i.code == code; });
}

}  // namespace

TEST_CASE("valid configurations report nothing") {
    CHECK(validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::ideal(), {1.0}).empty());
    CHECK(validate_config(ResourceSpec::two_mode(0.0), RotationSpec::physical(1.0), {0.5}).empty());
    CHECK(validate_config(ResourceSpec::split_thermal(1.0, 1.0), RotationSpec::ideal(), {1.0}).empty());
}

TEST_CASE("thermal variance below one is rejected") {
    auto issues = validate_config(ResourceSpec::split_thermal(1.0, 0.5), RotationSpec::ideal(), {1.0});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].code == "thermal.v.range");
    CHECK(issues[0].message == "V < 1");
}

TEST_CASE("nonpositive d is rejected") {
    auto issues = validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::physical(0.0), {1.0});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].code == "rotation.d.range");
    CHECK(issues[0].message == "d must be positive");
    CHECK(has(validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::physical(-2.0), {1.0}), "rotation.d.range"));
}

TEST_CASE("every problem is listed, not just the first") {
    ResourceSpec s = ResourceSpec::split_thermal(-1.0, 0.2);
    s.center.reset();
    RotationSpec rot{RotationKind::Physical, {}};
    auto issues = validate_config(s, rot, {1.5});
    CHECK(has(issues, "resource.r.range"));
    CHECK(has(issues, "thermal.v.range"));
    CHECK(has(issues, "thermal.center.missing"));
    CHECK(has(issues, "rotation.d.missing"));
    CHECK(has(issues, "eta.range"));
    CHECK(issues.size() == 5);
}

TEST_CASE("fields that do not belong to the resource are flagged") {
    ResourceSpec s = ResourceSpec::split_vacuum(1.0);
    s.v = ThermalVariance{2.0};
    RotationSpec rot = RotationSpec::ideal();
    rot.d = KerrDispScale{1.0};
    auto issues = validate_config(s, rot, {1.0});
    CHECK(has(issues, "thermal.v.unexpected"));
    CHECK(has(issues, "rotation.d.unexpected"));
}

TEST_CASE("non-finite inputs") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(has(validate_config(ResourceSpec::split_vacuum(nan), RotationSpec::ideal(), {1.0}), "resource.r.finite"));
    CHECK(has(validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::physical(inf), {1.0}), "rotation.d.finite"));
    CHECK(has(validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::ideal(), {nan}), "eta.finite"));
    CHECK(has(validate_config(ResourceSpec::split_thermal(1.0, nan), RotationSpec::ideal(), {1.0}), "thermal.v.finite"));
}

TEST_CASE("eta boundaries") {
    auto check_eta = [](double e) { return validate_config(ResourceSpec::split_vacuum(1.0), RotationSpec::ideal(), {e}); };
    CHECK(check_eta(1.0).empty());
    CHECK(check_eta(1e-9).empty());
    CHECK(has(check_eta(0.0), "eta.range"));
    CHECK(has(check_eta(1.0 + 1e-12), "eta.range"));
}

TEST_CASE("resource names round-trip") {
    for (auto k : {ResourceKind::SplitSqueezedVacuum, ResourceKind::SplitSqueezedThermal,
                   ResourceKind::TwoModeSqueezedVacuum}) {
        auto parsed = parse_resource_kind(to_string(k));
        REQUIRE(parsed);
        CHECK(*parsed == k);
    }
    CHECK(parse_resource_kind("tmss") == ResourceKind::TwoModeSqueezedVacuum);
    CHECK_FALSE(parse_resource_kind("squeezed"));
}

TEST_CASE("Result carries either a value or an error") {
    Result<double> ok = 0.5;
    Result<double> bad = domain_error("nope");
    CHECK(ok.ok());
    CHECK(*ok == 0.5);
    CHECK_FALSE(bad.ok());
    CHECK(bad.error().code == ErrorCode::DomainError);
    CHECK_THROWS(bad.value());
}
