#include "rbnn/runconfig.hpp"

#include <fstream>

#include "rbnn/checkpoint.hpp"

namespace rbnn {

using nlohmann::json;

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    try {
        json j;
        f >> j;
        return j;
    } catch (const json::parse_error& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
}

namespace {

double get_num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be a number");
    return j.at(key).get<double>();
}

ConstitutiveParams parse_params(const json& j) {
    ConstitutiveParams p;
    p.G0 = get_num(j, "G0", p.G0);
    p.nu = get_num(j, "nu", p.nu);
    p.n = get_num(j, "n", p.n);
    p.phi_c_deg = get_num(j, "phi_c_deg", p.phi_c_deg);
    p.e_c0 = get_num(j, "e_c0", p.e_c0);
    p.lambda_cs = get_num(j, "lambda_cs", p.lambda_cs);
    p.xi = get_num(j, "xi", p.xi);
    p.d_exp = get_num(j, "d_exp", p.d_exp);
    p.p_atm = get_num(j, "p_atm", p.p_atm);
    p.validate();
    return p;
}

json params_to_json(const ConstitutiveParams& p) {
    return json{{"G0", p.G0},           {"nu", p.nu},
                {"n", p.n},             {"phi_c_deg", p.phi_c_deg},
                {"e_c0", p.e_c0},       {"lambda_cs", p.lambda_cs},
                {"xi", p.xi},           {"d_exp", p.d_exp},
                {"p_atm", p.p_atm}};
}

Drainage parse_drainage(const std::string& s) {
    if (s == "drained") return Drainage::Drained;
    if (s == "undrained") return Drainage::Undrained;
    throw ConfigError("drainage must be 'drained' or 'undrained', got '" + s + "'");
}

PathKind parse_path(const std::string& s) {
    if (s == "monotonic") return PathKind::Monotonic;
    if (s == "cyclic") return PathKind::Cyclic;
    throw ConfigError("path must be 'monotonic' or 'cyclic', got '" + s + "'");
}

}  // namespace

SimulateJob parse_simulate_config(const json& j) {
    SimulateJob job;
    if (j.contains("params")) job.params = parse_params(j.at("params"));
    if (!j.contains("suite") || !j.at("suite").is_array() || j.at("suite").empty())
        throw ConfigError("simulate config needs a non-empty 'suite' array");

    for (const json& e : j.at("suite")) {
        SeriesConfig base;
        base.sigma3 = get_num(e, "sigma3", 0.0);
        base.drainage = parse_drainage(e.value("drainage", "drained"));
        base.path = parse_path(e.value("path", "cyclic"));
        base.amplitude = get_num(e, "amplitude", 0.0);
        base.n_cycles = static_cast<int>(get_num(e, "cycles", 1));
        base.steps_per_branch = static_cast<int>(get_num(e, "steps_per_branch", 1));
        if (e.contains("e0_list")) {
            for (const json& v : e.at("e0_list")) {
                SeriesConfig c = base;
                c.e0 = v.get<double>();
                job.suite.push_back(c);
            }
        } else {
            base.e0 = get_num(e, "e0", 0.0);
            if (e.contains("id")) base.id = e.at("id").get<std::string>();
            job.suite.push_back(base);
        }
    }

    job.opt.seed = static_cast<std::uint64_t>(get_num(j, "seed", 0));
    job.opt.noise_sigma = get_num(j, "noise_sigma", 0.0);
    job.opt.ru_stop = get_num(j, "ru_stop", 0.95);
    std::string eq = j.value("equalize", "min");
    job.opt.equalize = eq == "min"     ? Equalize::Min
                       : eq == "error" ? Equalize::Error
                       : eq == "none"  ? Equalize::None
                                       : throw ConfigError("equalize must be min|error|none");
    job.out = j.value("out", job.out);

    job.resolved = j;
    job.resolved["params"] = params_to_json(job.params);
    job.resolved["seed"] = job.opt.seed;
    job.resolved["noise_sigma"] = job.opt.noise_sigma;
    job.resolved["ru_stop"] = job.opt.ru_stop;
    job.resolved["equalize"] = eq;
    job.resolved["out"] = job.out;
    return job;
}

SplitSpec parse_split_spec(const json& j) {
    SplitSpec s;
    auto strings = [&](const char* key) {
        return j.contains(key) ? j.at(key).get<std::vector<std::string>>()
                               : std::vector<std::string>{};
    };
    auto doubles = [&](const char* key) {
        return j.contains(key) ? j.at(key).get<std::vector<double>>() : std::vector<double>{};
    };
    s.train_ids = strings("train_ids");
    s.val_ids = strings("val_ids");
    s.test_ids = strings("test_ids");
    s.val_e0 = doubles("val_e0");
    s.test_e0 = doubles("test_e0");
    s.val_sigma3 = doubles("val_sigma3");
    s.test_sigma3 = doubles("test_sigma3");
    return s;
}

TrainJob parse_train_config(const json& j) {
    TrainJob t;
    if (!j.contains("dataset")) throw ConfigError("train config needs 'dataset'");
    t.dataset = j.at("dataset").get<std::string>();
    t.model = j.value("model", t.model);
    if (t.model != "ffnn" && t.model != "rffnn" && t.model != "rbnn")
        throw ConfigError("model must be ffnn|rffnn|rbnn, got '" + t.model + "'");
    if (j.contains("arch") && j.at("arch").contains("hidden"))
        t.hidden = j.at("arch").at("hidden").get<std::vector<int>>();
    t.H = static_cast<int>(get_num(j, "H", t.model == "ffnn" ? 1 : 1));
    if (t.model == "ffnn" && t.H != 1) throw ConfigError("ffnn means H=1");
    if (j.contains("lr")) {
        const json& lr = j.at("lr");
        t.lr.lr0 = get_num(lr, "lr0", t.lr.lr0);
        t.lr.decay = get_num(lr, "decay", t.lr.decay);
        t.lr.decay_steps = static_cast<int>(get_num(lr, "decay_steps", t.lr.decay_steps));
    }
    t.epochs = static_cast<int>(get_num(j, "epochs", t.epochs));
    t.batch = static_cast<int>(get_num(j, "batch", t.batch));
    t.patience = static_cast<int>(get_num(j, "patience", t.patience));
    t.n_q = static_cast<int>(get_num(j, "n_q", t.n_q));
    if (j.contains("kl_weight")) {
        const json& kw = j.at("kl_weight");
        if (kw.is_string() && kw.get<std::string>() == "per-window")
            t.kl_per_window = true;
        else if (kw.is_number())
            t.kl_weight = kw.get<double>();
        else
            throw ConfigError("kl_weight must be a number or \"per-window\"");
    }
    t.var_floor = get_num(j, "var_floor", t.var_floor);
    t.sigma_init = get_num(j, "sigma_init", t.sigma_init);
    t.seed = static_cast<std::uint64_t>(get_num(j, "seed", 0));
    if (j.contains("split")) t.split = parse_split_spec(j.at("split"));
    t.out = j.value("out", t.out);
    t.history = j.value("history", t.history);

    t.resolved = j;
    t.resolved["model"] = t.model;
    t.resolved["arch"] = json{{"hidden", t.hidden}};
    t.resolved["H"] = t.H;
    t.resolved["lr"] = json{{"lr0", t.lr.lr0}, {"decay", t.lr.decay},
                            {"decay_steps", t.lr.decay_steps}};
    t.resolved["epochs"] = t.epochs;
    t.resolved["batch"] = t.batch;
    t.resolved["patience"] = t.patience;
    t.resolved["seed"] = t.seed;
    t.resolved["out"] = t.out;
    if (t.model == "rbnn") {
        t.resolved["n_q"] = t.n_q;
        t.resolved["kl_weight"] = t.kl_per_window ? json("per-window") : json(t.kl_weight);
        t.resolved["var_floor"] = t.var_floor;
        t.resolved["sigma_init"] = t.sigma_init;
    }
    return t;
}

SweepJob parse_sweep_config(const json& j) {
    SweepJob s;
    s.base = parse_train_config(j);
    if (!j.contains("H_list") || !j.at("H_list").is_array() || j.at("H_list").empty())
        throw ConfigError("sweep config needs a non-empty 'H_list'");
    s.h_list = j.at("H_list").get<std::vector<int>>();
    s.sweep_epochs = static_cast<int>(get_num(j, "sweep_epochs", s.sweep_epochs));
    s.out = j.value("sweep_out", s.out);
    s.resolved = s.base.resolved;
    s.resolved["H_list"] = s.h_list;
    s.resolved["sweep_epochs"] = s.sweep_epochs;
    s.resolved["sweep_out"] = s.out;
    return s;
}

void write_manifest(const std::string& path, const std::string& command,
                    const json& resolved_config, const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["config"] = resolved_config;
    m["outputs"] = outputs;
    atomic_write_text(path, m.dump(1));
}

}  // namespace rbnn
