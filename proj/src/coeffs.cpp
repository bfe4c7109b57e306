#include "symsplit/coeffs.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace symsplit {

std::string_view to_string(MethodKind kind) {
    switch (kind) {
        case MethodKind::ABA: return "ABA";
        case MethodKind::BAB: return "BAB";
        case MethodKind::ABAH: return "ABAH";
    }
    return "?";
}

MethodKind parse_method_kind(std::string_view text) {
    if (text == "ABA") return MethodKind::ABA;
    if (text == "BAB") return MethodKind::BAB;
    if (text == "ABAH") return MethodKind::ABAH;
    throw MethodError("unknown method kind '" + std::string(text) + "'");
}

std::string format_order(const GeneralizedOrder& order) {
    std::string out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(order[i]);
    }
    return out;
}

GeneralizedOrder parse_order(std::string_view text) {
    std::string s;
    for (char ch : text)
        if (ch != '(' && ch != ')' && !std::isspace(static_cast<unsigned char>(ch))) s += ch;
    GeneralizedOrder order;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + next, v);
        if (ec != std::errc() || ptr != s.data() + next || v < 1)
            throw MethodError("malformed generalized order '" + std::string(text) + "'");
        order.push_back(v);
        pos = next + 1;
    }
    if (order.empty()) throw MethodError("empty generalized order");
    return order;
}

CoefficientValue::CoefficientValue(std::string decimal) : decimal_(std::move(decimal)) {
    char* end = nullptr;
    working_ = std::strtod(decimal_.c_str(), &end);
    if (end == decimal_.c_str() || *end != '\0') throw MethodError("bad coefficient literal '" + decimal_ + "'");
}

int CoefficientValue::significant_digits() const {
    std::string mantissa = decimal_.substr(0, decimal_.find_first_of("eE"));
    std::string digits;
    for (char ch : mantissa)
        if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    auto first = digits.find_first_not_of('0');
    if (first == std::string::npos) return 1;
    return static_cast<int>(digits.size() - first);
}

void SplittingMethod::validate() const {
    if (stages < 1) throw MethodError(id + ": stage count must be at least 1");
    if (a_kernel.empty() || b_kernel.empty()) throw MethodError(id + ": empty coefficient kernel");
    if (static_cast<int>(a_kernel.size()) != a_kernel_size(stages) ||
        static_cast<int>(b_kernel.size()) != b_kernel_size(stages)) {
        std::ostringstream msg;
        msg << id << ": kernel lengths (" << a_kernel.size() << ", " << b_kernel.size() << ") inconsistent with "
            << stages << " stages";
        throw MethodError(msg.str());
    }
}

StageSequence<Real> expand_palindrome(const SplittingMethod& method) { return method.expand<Real>(); }

std::vector<Real> nodes(const SplittingMethod& method) { return nodes(method.expand<Real>()); }

SplittingMethod make_bab(std::string id, GeneralizedOrder order, int bab_stages,
                         const std::vector<std::string>& a_inner, const std::vector<std::string>& b_kernel) {
    SplittingMethod m;
    m.id = std::move(id);
    m.kind = MethodKind::BAB;
    m.order = std::move(order);
    m.stages = bab_stages + 1;
    m.a_kernel.emplace_back("0");
    for (const auto& a : a_inner) m.a_kernel.emplace_back(a);
    for (const auto& b : b_kernel) m.b_kernel.emplace_back(b);
    m.validate();
    return m;
}

namespace {

struct MethodSpec {
    const char* id;
    MethodKind kind;
    GeneralizedOrder order;
    int stages;
    bool cubic;
    std::vector<const char*> a;
    std::vector<const char*> b;
};

// ABA82 (all-positive grid solution) and ABA84 (minimum-norm multistart
// solution) are frozen solver output; the solver tests re-derive both.
// The remaining tables are the published 40-digit values.
const std::vector<MethodSpec>& specs() {
    static const std::vector<MethodSpec> table = {
        {"LEAPFROG", MethodKind::ABA, {2, 2}, 1, false, {"0.5"}, {"1"}},
        {"ABA82",
         MethodKind::ABA,
         {8, 2},
         4,
         false,
         {"0.06943184420297371238802675555359524745214", "0.2605776340045981552106403648947824089476",
          "0.3399810435848562648026657591032446872006"},
         {"0.1739274225687269286865319746109997036177", "0.3260725774312730713134680253890002963823"}},
        {"ABA84",
         MethodKind::ABA,
         {8, 4},
         5,
         false,
         {"0.07534696026989288841652780368347446437265", "0.5179168546882567823007739784963156443238",
          "-0.09326381495814967071730178217979010869650"},
         {"0.1902259393736766192452307627384538974612", "0.8465240704435262570550805446467758341771",
          "-1.073500019634405752600622614770459463277"}},
        {"ABA104",
         MethodKind::ABA,
         {10, 4},
         7,
         false,
         {"0.04706710064597250612947887637243678556564", "0.1847569354170881069247376193702560968574",
          "0.2827060056798362053243616565541452479160", "-0.01453004174289681837857815229683813033908"},
         {"0.1188819173681970199453503950853885936957", "0.2410504605515015657441667865901651105675",
          "-0.2732866667053238060543113981664559460630", "0.8267085775712504407295884329818044835997"}},
        {"ABA864",
         MethodKind::ABA,
         {8, 6, 4},
         7,
         false,
         {"0.0711334264982231177779387300061549964174", "0.241153427956640098736487795326289649618",
          "0.521411761772814789212136078067994229991", "-0.333698616227678005726562603400438876027"},
         {"0.183083687472197221961703757166430291072", "0.310782859898574869507522291054262796375",
          "-0.0265646185119588006972121379164987592663", "0.0653961422823734184559721793911134363710"}},
        {"ABA1064",
         MethodKind::ABA,
         {10, 6, 4},
         8,
         false,
         {"0.03809449742241219545697532230863756534060", "0.1452987161169137492940200726606637497442",
          "0.2076276957255412507162056113249882065158", "0.4359097036515261592231548624010651844006",
          "-0.6538612258327867093807117373907094120024"},
         {"0.09585888083707521061077150377145884776921", "0.2044461531429987806805077839164344779763",
          "0.2170703479789911017143385924306336714532", "-0.01737538195906509300561788011852699719871"}},
        {"ABAH844",
         MethodKind::ABAH,
         {8, 4},
         6,
         true,
         {"0.2741402689434018761640565440378637101205", "-0.1075684384401642306251105297063236526845",
          "-0.04801850259060169269119541715084750653701", "0.7628933441747280943044988056386148982021"},
         {"0.6408857951625127177322491164716010349386", "-0.8585754489567828565881283246356000103664",
          "0.7176896537942701388558792081639989754277"}},
        {"ABAH864",
         MethodKind::ABAH,
         {8, 6, 4},
         8,
         true,
         {"0.06810235651658372084723976682061164571212", "0.2511360387221033233072829580455350680082",
          "-0.07507264957216562516006821767601620052338", "-0.009544719701745007811488218957217113269121",
          "0.5307579480704471776340674235341732001443"},
         {"0.1684432593618954534310382697756917558148", "0.4243177173742677224300351657407231801453",
          "-0.5858109694681756812309015355404036521923", "0.4930499927320125053698281000239887162321"}},
        {"ABAH1064",
         MethodKind::ABAH,
         {10, 6, 4},
         9,
         true,
         {"0.04731908697653382270404371796320813250988", "0.2651105235748785159539480036185693201078",
          "-0.009976522883811240843267468164812380613143", "-0.05992919973494155126395247987729676004016",
          "0.2574761120673404534492282264603316880356"},
         {"0.1196884624585322035312864297489892143852", "0.3752955855379374250420128537687503199451",
          "-0.4684593418325993783650820409805381740605", "0.3351397342755897010393098942949569049275",
          "0.2766711191210800975049457263356834696055"}},
    };
    return table;
}

std::vector<SplittingMethod> build_registry() {
    std::vector<SplittingMethod> out;
    for (const auto& spec : specs()) {
        SplittingMethod m;
        m.id = spec.id;
        m.kind = spec.kind;
        m.order = spec.order;
        m.stages = spec.stages;
        m.cubic_condition = spec.cubic;
        for (const char* a : spec.a) m.a_kernel.emplace_back(a);
        for (const char* b : spec.b) m.b_kernel.emplace_back(b);
        m.validate();
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace

const std::vector<SplittingMethod>& registry() {
    static const std::vector<SplittingMethod> methods = build_registry();
    return methods;
}

const std::vector<std::string>& registry_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> v;
        for (const auto& m : registry()) v.push_back(m.id);
        return v;
    }();
    return ids;
}

const SplittingMethod& registry_lookup(std::string_view id) {
    for (const auto& m : registry())
        if (m.id == id) return m;
    throw MethodError("unknown method id '" + std::string(id) + "'");
}

void write_catalog(std::ostream& out, const std::vector<SplittingMethod>& methods) {
    for (const auto& m : methods) {
        out << "method " << m.id << " kind=" << to_string(m.kind) << " order=" << format_order(m.order)
            << " stages=" << m.stages << " cubic=" << (m.cubic_condition ? 1 : 0) << '\n';
        for (std::size_t i = 0; i < m.a_kernel.size(); ++i) out << "a" << i + 1 << ' ' << m.a_kernel[i].decimal() << '\n';
        for (std::size_t i = 0; i < m.b_kernel.size(); ++i) out << "b" << i + 1 << ' ' << m.b_kernel[i].decimal() << '\n';
        out << "end\n";
    }
}

std::vector<SplittingMethod> read_catalog(std::istream& in) {
    std::vector<SplittingMethod> out;
    SplittingMethod current;
    bool open = false;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        throw MethodError("catalog line " + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "method") {
            if (open) fail("nested method block");
            current = SplittingMethod{};
            ls >> current.id;
            std::string field;
            while (ls >> field) {
                auto eq = field.find('=');
                if (eq == std::string::npos) fail("expected key=value, got '" + field + "'");
                std::string key = field.substr(0, eq), value = field.substr(eq + 1);
                if (key == "kind")
                    current.kind = parse_method_kind(value);
                else if (key == "order")
                    current.order = parse_order(value);
                else if (key == "stages")
                    current.stages = std::stoi(value);
                else if (key == "cubic")
                    current.cubic_condition = value == "1" || value == "true";
                else
                    fail("unknown key '" + key + "'");
            }
            open = true;
        } else if (word == "end") {
            if (!open) fail("'end' without 'method'");
            current.validate();
            out.push_back(std::move(current));
            open = false;
        } else if (word.size() > 1 && (word[0] == 'a' || word[0] == 'b')) {
            if (!open) fail("coefficient outside a method block");
            std::string value;
            ls >> value;
            auto& kernel = word[0] == 'a' ? current.a_kernel : current.b_kernel;
            std::size_t index = std::stoul(word.substr(1));
            if (index != kernel.size() + 1) fail("coefficients must be listed in order");
            kernel.emplace_back(value);
        } else {
            fail("unrecognised line");
        }
    }
    if (open) fail("unterminated method block");
    return out;
}

}  // namespace symsplit
