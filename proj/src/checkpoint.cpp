#include "rbnn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rbnn {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const json& a) {
    Vec v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json range_to_json(const Range& r) { return json{{"lo", r.lo}, {"hi", r.hi}}; }

Range range_from_json(const json& j) { return Range{j.at("lo").get<double>(), j.at("hi").get<double>()}; }

}  // namespace

json norm_stats_to_json(const NormStats& st) {
    json j;
    j["has_rms"] = st.has_rms;
    j["has_ranges"] = st.has_ranges;
    j["group_sigma3"] = st.group_sigma3;
    j["p_rms"] = st.p_rms;
    j["q_rms"] = st.q_rms;
    j["third"] = range_to_json(st.third);
    json u = json::array();
    for (const Range& r : st.u) u.push_back(range_to_json(r));
    j["u"] = u;
    j["theta_sigma3"] = range_to_json(st.theta_sigma3);
    j["theta_e0"] = range_to_json(st.theta_e0);
    return j;
}

NormStats norm_stats_from_json(const json& j) {
    NormStats st;
    st.has_rms = j.at("has_rms").get<bool>();
    st.has_ranges = j.at("has_ranges").get<bool>();
    st.group_sigma3 = j.at("group_sigma3").get<std::vector<double>>();
    st.p_rms = j.at("p_rms").get<std::vector<double>>();
    st.q_rms = j.at("q_rms").get<std::vector<double>>();
    st.third = range_from_json(j.at("third"));
    for (const json& r : j.at("u")) st.u.push_back(range_from_json(r));
    st.theta_sigma3 = range_from_json(j.at("theta_sigma3"));
    st.theta_e0 = range_from_json(j.at("theta_e0"));
    return st;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f << content;
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    json j;
    j["model"] = ck.model;
    j["arch"] = {{"input_dim", ck.arch.input_dim},
                 {"hidden", ck.arch.hidden},
                 {"state_dim", ck.arch.state_dim}};
    j["H"] = ck.H;
    j["seed"] = ck.seed;
    j["norm_stats"] = norm_stats_to_json(ck.stats);
    j["config"] = ck.config;
    if (ck.model == "rbnn") {
        j["mu"] = vec_to_json(ck.mu);
        j["sigma_raw"] = vec_to_json(ck.sigma_raw);
    } else {
        j["params"] = vec_to_json(ck.params);
    }
    atomic_write_text(path, j.dump(1));
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& ex) {
        throw std::runtime_error("checkpoint " + path + ": " + ex.what());
    }
    Checkpoint ck;
    ck.model = j.at("model").get<std::string>();
    ck.arch.input_dim = j.at("arch").at("input_dim").get<int>();
    ck.arch.hidden = j.at("arch").at("hidden").get<std::vector<int>>();
    ck.arch.state_dim = j.at("arch").at("state_dim").get<int>();
    ck.H = j.at("H").get<int>();
    ck.seed = j.at("seed").get<std::uint64_t>();
    ck.stats = norm_stats_from_json(j.at("norm_stats"));
    if (j.contains("config")) ck.config = j.at("config");
    if (ck.model == "rbnn") {
        ck.mu = vec_from_json(j.at("mu"));
        ck.sigma_raw = vec_from_json(j.at("sigma_raw"));
    } else {
        ck.params = vec_from_json(j.at("params"));
    }
    ck.arch.validate();
    return ck;
}

}  // namespace rbnn
