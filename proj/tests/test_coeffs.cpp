#include "symsplit/coeffs.hpp"
#include "symsplit/orderconds.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace symsplit;

namespace {

Real expanded_sum(const std::vector<Real>& v) {
    Real s(0);
    for (const auto& x : v) s += x;
    return s;
}

bool classical_order_above_two(const SplittingMethod& m) { return m.order.back() > 2; }

}  // namespace

TEST_CASE("registry holds the nine built-in methods") {
    const std::vector<std::string> expected{"LEAPFROG", "ABA82",   "ABA84",   "ABA104",  "ABA864",
                                            "ABA1064",  "ABAH844", "ABAH864", "ABAH1064"};
    CHECK(registry_ids() == expected);
    CHECK_THROWS(registry_lookup("ABA42"));
}

TEST_CASE("registry lookup returns the tabulated coefficients") {
    const auto& aba104 = registry_lookup("ABA104");
    CHECK(aba104.a_kernel[0].decimal() == "0.04706710064597250612947887637243678556564");
    CHECK(aba104.stages == 7);
    CHECK(aba104.order == GeneralizedOrder{10, 4});

    const auto& abah844 = registry_lookup("ABAH844");
    CHECK(abah844.b_kernel[1].decimal() == "-0.8585754489567828565881283246356000103664");
    CHECK(abah844.cubic_condition);
    CHECK(abah844.kind == MethodKind::ABAH);

    const auto& lf = registry_lookup("LEAPFROG");
    CHECK(lf.kind == MethodKind::ABA);
    CHECK(lf.order == GeneralizedOrder{2, 2});
    CHECK(lf.a_kernel.size() == 1);
    CHECK(lf.a_kernel[0].working() == 0.5);
    CHECK(lf.b_kernel[0].working() == 1.0);
}

TEST_CASE("palindromic expansion follows the composition layout") {
    ScopedDigits guard(50);
    SUBCASE("ABA104 gives 15 symbols a1 b1 a2 b2 a3 b3 a4 b4 a4 b3 a3 b2 a2 b1 a1") {
        const auto& m = registry_lookup("ABA104");
        auto seq = m.expand<Real>();
        REQUIRE(seq.a.size() == 8);
        REQUIRE(seq.b.size() == 7);
        const int a_slots[] = {0, 1, 2, 3, 3, 2, 1, 0};
        const int b_slots[] = {0, 1, 2, 3, 2, 1, 0};
        for (int i = 0; i < 8; ++i) CHECK(seq.a[static_cast<std::size_t>(i)] == m.a_kernel[static_cast<std::size_t>(a_slots[i])].exact());
        for (int i = 0; i < 7; ++i) CHECK(seq.b[static_cast<std::size_t>(i)] == m.b_kernel[static_cast<std::size_t>(b_slots[i])].exact());
        CHECK(seq.stages() == 7);
    }
    SUBCASE("leapfrog is (1/2, 1, 1/2)") {
        auto seq = registry_lookup("LEAPFROG").expand<double>();
        CHECK(seq.a == std::vector<double>{0.5, 0.5});
        CHECK(seq.b == std::vector<double>{1.0});
    }
    SUBCASE("ABAH1064 gives 19 symbols with a5 and b5 central") {
        const auto& m = registry_lookup("ABAH1064");
        auto seq = m.expand<double>();
        CHECK(seq.a.size() == 10);
        CHECK(seq.b.size() == 9);
        CHECK(seq.a[4] == m.a_kernel[4].working());
        CHECK(seq.a[5] == m.a_kernel[4].working());
        CHECK(seq.b[4] == m.b_kernel[4].working());
        CHECK(seq.b[3] == m.b_kernel[3].working());
        CHECK(seq.b[5] == m.b_kernel[3].working());
    }
}

TEST_CASE("expansion is palindromic by index for every registry method") {
    for (const auto& m : registry()) {
        CAPTURE(m.id);
        const int s = m.stages;
        for (int i = 0; i <= s; ++i) CHECK(a_kernel_slot(i, s) == a_kernel_slot(s - i, s));
        for (int i = 0; i < s; ++i) CHECK(b_kernel_slot(i, s) == b_kernel_slot(s - 1 - i, s));
        auto seq = m.expand<double>();
        CHECK(seq.stages() == s);
        for (int i = 0; i <= s; ++i) CHECK(seq.a[static_cast<std::size_t>(i)] == seq.a[static_cast<std::size_t>(s - i)]);
    }
}

TEST_CASE("kernel length must match the stage count") {
    SplittingMethod m = registry_lookup("ABA104");
    m.b_kernel.pop_back();
    CHECK_THROWS_AS(m.validate(), MethodError);
    CHECK_THROWS_AS(m.expand<double>(), MethodError);
}

TEST_CASE("nodes are prefix sums of the expanded a sequence") {
    ScopedDigits guard(50);
    SUBCASE("leapfrog") {
        auto c = nodes(registry_lookup("LEAPFROG"));
        REQUIRE(c.size() == 2);
        CHECK(c[0] == Real(0.5));
        CHECK(c[1] == Real(1));
    }
    SUBCASE("ABA104: c7 + a1 = 1 to the 40 stored digits") {
        const auto& m = registry_lookup("ABA104");
        auto seq = expand_palindrome(m);
        Real c7(0);
        for (int i = 0; i < 7; ++i) c7 += seq.a[static_cast<std::size_t>(i)];
        CHECK(abs(c7 + m.a_kernel[0].exact() - 1) <= parse_real("1e-39"));
        CHECK(nodes(m)[6] == c7);
    }
    SUBCASE("ABAH844: c1 = a1") {
        const auto& m = registry_lookup("ABAH844");
        CHECK(format_fixed(nodes(m)[0], 17) == "0.27414026894340188");
    }
}

TEST_CASE("coefficient strings survive a 50-digit parse and 40-digit print") {
    ScopedDigits guard(50);
    for (const auto& m : registry()) {
        CAPTURE(m.id);
        for (const auto* kernel : {&m.a_kernel, &m.b_kernel})
            for (const auto& c : *kernel) {
                CHECK(format_fixed(c.exact(), c.significant_digits()) == c.decimal());
                CHECK(c.working() == static_cast<double>(c.exact()));
            }
    }
}

TEST_CASE("consistency sums of the registry methods") {
    ScopedDigits guard(50);
    const Real tol = parse_real("1e-38");
    for (const auto& m : registry()) {
        if (m.id == "ABA864") continue;  // see the next test case
        CAPTURE(m.id);
        auto seq = expand_palindrome(m);
        CHECK(abs(expanded_sum(seq.a) - 1) <= tol);
        CHECK(abs(expanded_sum(seq.b) - 1) <= tol);
    }
}

// The stored ABA864 b-coefficients sum to 1 - 4.98e-31, so the 1e-38 bound
// cannot hold for those digits as given.
TEST_CASE("ABA864 consistency sums at 1e-38" * doctest::should_fail()) {
    ScopedDigits guard(50);
    auto seq = expand_palindrome(registry_lookup("ABA864"));
    CHECK(abs(expanded_sum(seq.a) - 1) <= parse_real("1e-38"));
    CHECK(abs(expanded_sum(seq.b) - 1) <= parse_real("1e-38"));
}

TEST_CASE("ABA864 b-sum defect comes from the stored digits") {
    ScopedDigits guard(50);
    auto seq = expand_palindrome(registry_lookup("ABA864"));
    const Real defect = expanded_sum(seq.b) - 1;
    CHECK(format_sci(defect, 3) == "-4.979e-31");
    CHECK(abs(expanded_sum(seq.a) - 1) <= parse_real("1e-38"));
}

TEST_CASE("ABAH methods satisfy sum b^3 = 0") {
    ScopedDigits guard(50);
    for (const auto& m : registry()) {
        if (m.kind != MethodKind::ABAH) continue;
        CAPTURE(m.id);
        auto seq = expand_palindrome(m);
        Real s(0);
        for (const auto& b : seq.b) s += b * b * b;
        CHECK(abs(s) <= parse_real("1e-36"));
    }
}

TEST_CASE("methods of classical order above two carry negative a and b") {
    for (const auto& m : registry()) {
        if (!classical_order_above_two(m)) continue;
        CAPTURE(m.id);
        bool neg_a = false, neg_b = false;
        for (const auto& c : m.a_kernel) neg_a = neg_a || c.working() < 0;
        for (const auto& c : m.b_kernel) neg_b = neg_b || c.working() < 0;
        CHECK(neg_a);
        CHECK(neg_b);
    }
    // ABA82 has classical order two and is the all-positive solution.
    for (const auto& c : registry_lookup("ABA82").a_kernel) CHECK(c.working() > 0);
}

TEST_CASE("catalog text round-trips the registry") {
    std::ostringstream out;
    write_catalog(out, registry());
    std::istringstream in(out.str());
    auto back = read_catalog(in);
    REQUIRE(back.size() == registry().size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = registry()[i];
        const auto& b = back[i];
        CAPTURE(a.id);
        CHECK(b.id == a.id);
        CHECK(b.kind == a.kind);
        CHECK(b.order == a.order);
        CHECK(b.stages == a.stages);
        CHECK(b.cubic_condition == a.cubic_condition);
        REQUIRE(b.a_kernel.size() == a.a_kernel.size());
        REQUIRE(b.b_kernel.size() == a.b_kernel.size());
        for (std::size_t k = 0; k < a.a_kernel.size(); ++k) CHECK(b.a_kernel[k].decimal() == a.a_kernel[k].decimal());
        for (std::size_t k = 0; k < a.b_kernel.size(); ++k) CHECK(b.b_kernel[k].decimal() == a.b_kernel[k].decimal());
    }
    std::ostringstream again;
    write_catalog(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("catalog reader rejects malformed blocks") {
    std::istringstream missing_end("method X kind=ABA order=2,2 stages=1 cubic=0\na1 0.5\nb1 1\n");
    CHECK_THROWS(read_catalog(missing_end));
    std::istringstream bad_kind("method X kind=XYZ order=2,2 stages=1 cubic=0\na1 0.5\nb1 1\nend\n");
    CHECK_THROWS(read_catalog(bad_kind));
    std::istringstream bad_number("method X kind=ABA order=2,2 stages=1 cubic=0\na1 0.5x\nb1 1\nend\n");
    CHECK_THROWS(read_catalog(bad_number));
}

TEST_CASE("BAB schemes are stored as ABA with a leading zero") {
    // Leapfrog in BAB form: b1 a2 b1 with b1 = 1/2, a2 = 1, i.e. 2 ABA stages.
    auto m = make_bab("BAB_LF", {2, 2}, 1, {"1"}, {"0.5"});
    CHECK(m.kind == MethodKind::BAB);
    CHECK(m.stages == 2);
    auto seq = m.expand<double>();
    CHECK(seq.a == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(seq.b == std::vector<double>{0.5, 0.5});
    ScopedDigits guard(50);
    CHECK(certify(m, parse_real("1e-30")).certified);
}

TEST_CASE("generalized order text") {
    CHECK(format_order({10, 6, 4}) == "10,6,4");
    CHECK(parse_order("(10,6,4)") == GeneralizedOrder{10, 6, 4});
    CHECK(parse_order("8,2") == GeneralizedOrder{8, 2});
    CHECK_THROWS(parse_order("8,,2"));
    CHECK_THROWS(parse_order(""));
    CHECK(parse_method_kind("ABAH") == MethodKind::ABAH);
    CHECK_THROWS(parse_method_kind("CBA"));
}
