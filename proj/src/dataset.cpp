#include "rbnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rbnn {

const char* to_string(TestKind k) {
    switch (k) {
        case TestKind::MonotonicCD: return "monotonic-CD";
        case TestKind::CyclicCD: return "cyclic-CD";
        case TestKind::CyclicCU: return "cyclic-CU";
    }
    return "?";
}

TestKind kind_from_string(const std::string& s) {
    if (s == "monotonic-CD") return TestKind::MonotonicCD;
    if (s == "cyclic-CD") return TestKind::CyclicCD;
    if (s == "cyclic-CU") return TestKind::CyclicCU;
    throw std::invalid_argument("unknown test kind: " + s);
}

const char* third_kind(TestKind k) {
    switch (k) {
        case TestKind::MonotonicCD: return "e";
        case TestKind::CyclicCD: return "eps_v";
        case TestKind::CyclicCU: return "r_u";
    }
    return "?";
}

int input_dim(TestKind k) { return k == TestKind::MonotonicCD ? 2 : 4; }

Invariants compute_invariants(double sigma1, double sigma3) {
    return {(sigma1 + 2.0 * sigma3) / 3.0, sigma1 - sigma3};
}

void TriaxSeries::validate() const {
    if (states.size() != inputs.size() + 1)
        throw std::runtime_error("series " + test_id + ": expected N+1 states for N inputs, got " +
                                 std::to_string(states.size()) + " states / " +
                                 std::to_string(inputs.size()) + " inputs");
    if (inputs.empty()) throw std::runtime_error("series " + test_id + " has no steps");
}

Vec TriaxSeries::state_vec(int t) const {
    const TriaxState& s = states.at(static_cast<size_t>(t));
    Vec v(3);
    v << s.p, s.q, s.third;
    return v;
}

Vec TriaxSeries::input_vec(int t) const {
    const StepInput& u = inputs.at(static_cast<size_t>(t) - 1);
    if (kind == TestKind::MonotonicCD) {
        Vec v(2);
        v << u.eps, u.deps;
        return v;
    }
    Vec v(4);
    v << u.eps, u.deps, u.delta, u.cycle;
    return v;
}

Vec TriaxSeries::theta_vec() const {
    Vec v(2);
    v << sigma3, e0;
    return v;
}

int Dataset::common_steps() const {
    if (series.empty()) return 0;
    int n = series.front().steps();
    for (const TriaxSeries& s : series)
        if (s.steps() != n) return -1;
    return n;
}

const TriaxSeries* Dataset::find(const std::string& id) const {
    for (const TriaxSeries& s : series)
        if (s.test_id == id) return &s;
    return nullptr;
}

void Dataset::validate() const {
    std::set<std::string> ids;
    for (const TriaxSeries& s : series) {
        s.validate();
        if (!ids.insert(s.test_id).second)
            throw std::runtime_error("duplicate test id: " + s.test_id);
    }
}

// ---- CSV ----

namespace {

constexpr const char* kHeader =
    "test_id,kind,sigma3_kpa,e0,step,eps,deps,delta,cycle,p_kpa,q_kpa,third_value,third_kind";

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, int line, const char* col) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::runtime_error("line " + std::to_string(line) + ": cannot parse " + col + " '" +
                                 field + "'");
    return v;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << kHeader << "\n";
    for (const TriaxSeries& s : ds.series) {
        for (size_t t = 0; t < s.states.size(); ++t) {
            StepInput u;  // step 0 carries zero inputs
            if (t > 0) u = s.inputs[t - 1];
            const TriaxState& st = s.states[t];
            f << s.test_id << ',' << to_string(s.kind) << ',' << format_double(s.sigma3) << ','
              << format_double(s.e0) << ',' << t << ',' << format_double(u.eps) << ','
              << format_double(u.deps) << ',' << format_double(u.delta) << ','
              << format_double(u.cycle) << ',' << format_double(st.p) << ','
              << format_double(st.q) << ',' << format_double(st.third) << ','
              << third_kind(s.kind) << "\n";
        }
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

Dataset load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);

    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file, expected header");
    std::vector<std::string> header = split_line(line);
    std::vector<std::string> expected = split_line(kHeader);
    if (header.size() != expected.size()) {
        for (const std::string& col : expected)
            if (std::find(header.begin(), header.end(), col) == header.end())
                throw std::runtime_error(path + ": schema error, missing column '" + col + "'");
        throw std::runtime_error(path + ": schema error, unexpected column count");
    }
    for (size_t i = 0; i < expected.size(); ++i)
        if (header[i] != expected[i])
            throw std::runtime_error(path + ": schema error, expected column '" + expected[i] +
                                     "' at position " + std::to_string(i) + ", found '" +
                                     header[i] + "'");

    Dataset ds;
    TriaxSeries* cur = nullptr;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> c = split_line(line);
        if (c.size() != expected.size())
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(expected.size()) + " fields, got " +
                                     std::to_string(c.size()));

        const std::string& id = c[0];
        if (cur == nullptr || cur->test_id != id) {
            if (ds.find(id) != nullptr)
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": rows of test " + id + " are not contiguous");
            ds.series.emplace_back();
            cur = &ds.series.back();
            cur->test_id = id;
            cur->kind = kind_from_string(c[1]);
            cur->sigma3 = parse_double(c[2], lineno, "sigma3_kpa");
            cur->e0 = parse_double(c[3], lineno, "e0");
        }
        int step = static_cast<int>(parse_double(c[4], lineno, "step"));
        if (step != static_cast<int>(cur->states.size()))
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + ": test " + id +
                                     " expected step " + std::to_string(cur->states.size()) +
                                     ", found " + std::to_string(step));
        if (c[12] != third_kind(cur->kind))
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": third_kind '" + c[12] + "' does not match kind " +
                                     to_string(cur->kind));
        TriaxState st;
        st.p = parse_double(c[9], lineno, "p_kpa");
        st.q = parse_double(c[10], lineno, "q_kpa");
        st.third = parse_double(c[11], lineno, "third_value");
        cur->states.push_back(st);
        if (step > 0) {
            StepInput u;
            u.eps = parse_double(c[5], lineno, "eps");
            u.deps = parse_double(c[6], lineno, "deps");
            u.delta = parse_double(c[7], lineno, "delta");
            u.cycle = parse_double(c[8], lineno, "cycle");
            cur->inputs.push_back(u);
        }
    }

    ds.validate();
    if (!ds.empty() && ds.common_steps() < 0) {
        std::ostringstream msg;
        msg << path << ": series lengths differ (";
        for (const TriaxSeries& s : ds.series) msg << s.test_id << "=" << s.steps() << " ";
        msg << "); pad or truncate explicitly before loading";
        throw std::runtime_error(msg.str());
    }
    return ds;
}

// ---- splits ----

Split split_dataset(const Dataset& ds, const SplitSpec& spec) {
    int modes = 0;
    bool by_ids = !spec.val_ids.empty() || !spec.test_ids.empty() || !spec.train_ids.empty();
    bool by_e0 = !spec.val_e0.empty() || !spec.test_e0.empty();
    bool by_s3 = !spec.val_sigma3.empty() || !spec.test_sigma3.empty();
    modes = int(by_ids) + int(by_e0) + int(by_s3);
    if (modes > 1) throw std::invalid_argument("split spec mixes selection modes");

    auto match_value = [](const std::vector<double>& vals, double v) {
        for (double x : vals)
            if (std::abs(x - v) <= 1e-9 * std::max(1.0, std::abs(x))) return true;
        return false;
    };

    Split out;
    std::set<std::string> seen;
    for (const TriaxSeries& s : ds.series) {
        int dest = 0;  // 0 train, 1 val, 2 test
        if (by_ids) {
            bool in_val = std::find(spec.val_ids.begin(), spec.val_ids.end(), s.test_id) !=
                          spec.val_ids.end();
            bool in_test = std::find(spec.test_ids.begin(), spec.test_ids.end(), s.test_id) !=
                           spec.test_ids.end();
            bool in_train = std::find(spec.train_ids.begin(), spec.train_ids.end(), s.test_id) !=
                            spec.train_ids.end();
            if (int(in_val) + int(in_test) + int(in_train) > 1)
                throw std::invalid_argument("split spec: id " + s.test_id +
                                            " appears in more than one part");
            if (!spec.train_ids.empty() && !in_val && !in_test && !in_train)
                throw std::invalid_argument("split spec: id " + s.test_id +
                                            " missing from the explicit partition");
            dest = in_val ? 1 : in_test ? 2 : 0;
        } else if (by_e0) {
            bool v = match_value(spec.val_e0, s.e0), t = match_value(spec.test_e0, s.e0);
            if (v && t) throw std::invalid_argument("split spec: e0 value in both val and test");
            dest = v ? 1 : t ? 2 : 0;
        } else if (by_s3) {
            bool v = match_value(spec.val_sigma3, s.sigma3),
                 t = match_value(spec.test_sigma3, s.sigma3);
            if (v && t) throw std::invalid_argument("split spec: sigma3 value in both val and test");
            dest = v ? 1 : t ? 2 : 0;
        }
        (dest == 0 ? out.train : dest == 1 ? out.val : out.test).series.push_back(s);
        seen.insert(s.test_id);
    }

    // ids named by the spec but absent from the data are treated as spec errors
    auto check_known = [&](const std::vector<std::string>& ids) {
        for (const std::string& id : ids)
            if (ds.find(id) == nullptr)
                throw std::invalid_argument("split spec: unknown test id " + id);
    };
    check_known(spec.train_ids);
    check_known(spec.val_ids);
    check_known(spec.test_ids);
    return out;
}

// ---- sliding windows ----

std::vector<Window> segment_windows(const Dataset& ds, int H) {
    if (H < 1) throw std::invalid_argument("window length H must be >= 1");
    std::vector<Window> out;
    int u_dim = -1;
    for (size_t m = 0; m < ds.series.size(); ++m) {
        const TriaxSeries& s = ds.series[m];
        s.validate();
        int n = s.steps();
        if (H > n)
            throw std::invalid_argument("window length H=" + std::to_string(H) +
                                        " exceeds series length N=" + std::to_string(n));
        int dim = input_dim(s.kind);
        if (u_dim == -1) u_dim = dim;
        if (dim != u_dim)
            throw std::invalid_argument(
                "cannot mix monotonic and cyclic series in one windowed set");
        for (int k = 1; k <= n - H + 1; ++k) {
            Window w;
            w.series = static_cast<int>(m);
            w.start = k;
            w.s_init = s.state_vec(k - 1);
            w.inputs.resize(H, dim);
            w.targets.resize(H, 3);
            for (int t = 0; t < H; ++t) {
                w.inputs.row(t) = s.input_vec(k + t).transpose();
                w.targets.row(t) = s.state_vec(k + t).transpose();
            }
            w.theta = s.theta_vec();
            out.push_back(std::move(w));
        }
    }
    return out;
}

}  // namespace rbnn
