#include "uslab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uslab {

const char* preset_name(Preset p) {
    switch (p) {
        case Preset::kCut: return "cut";
        case Preset::kCutS: return "cut_s";
        case Preset::kCutSC: return "cut_sc";
        case Preset::kConPres: return "conpres";
    }
    return "?";
}

Preset preset_from_string(const std::string& s) {
    std::string t;
    for (char c : s) t += static_cast<char>(std::tolower(c));
    std::replace(t.begin(), t.end(), '+', '_');
    if (t == "cut") return Preset::kCut;
    if (t == "cut_s" || t == "cuts") return Preset::kCutS;
    if (t == "cut_sc" || t == "cutsc") return Preset::kCutSC;
    if (t == "conpres") return Preset::kConPres;
    throw std::invalid_argument("unknown preset: " + s);
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": " +
                                    v);
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(d);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": " +
                                    v);
    }
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void set_key(TrainConfig& c, const std::string& key, const std::string& val) {
    if (key == "preset") c.preset = preset_from_string(val);
    else if (key == "lambda_cls_r") c.lambda_cls_r = parse_double(key, val);
    else if (key == "lambda_cls_f") c.lambda_cls_f = parse_double(key, val);
    else if (key == "lambda_reg") c.lambda_reg = parse_double(key, val);
    else if (key == "lambda_cyc") c.lambda_cyc = parse_double(key, val);
    else if (key == "tau") c.tau = parse_double(key, val);
    else if (key == "nce_layers") c.nce_layers = split_csv(val);
    else if (key == "nce_reduction") {
        if (val == "mean") c.nce_reduction = NceReduction::kMean;
        else if (val == "sum") c.nce_reduction = NceReduction::kSum;
        else throw std::invalid_argument("config: nce_reduction must be mean or sum");
    }
    else if (key == "patches_per_layer") c.patches_per_layer = parse_int(key, val);
    else if (key == "lr") c.lr = parse_double(key, val);
    else if (key == "beta1") c.beta1 = parse_double(key, val);
    else if (key == "beta2") c.beta2 = parse_double(key, val);
    else if (key == "weight_decay") c.weight_decay = parse_double(key, val);
    else if (key == "grad_clip_norm") c.grad_clip_norm = parse_double(key, val);
    else if (key == "steps") c.steps = parse_int(key, val);
    else if (key == "epochs") c.epochs = parse_int(key, val);
    else if (key == "batch_size") c.batch_size = parse_int(key, val);
    else if (key == "seed") c.seed = static_cast<uint64_t>(
             std::stoull(val));
    else if (key == "checkpoint_every") c.checkpoint_every = parse_int(key, val);
    else if (key == "preview_every") c.preview_every = parse_int(key, val);
    else throw std::invalid_argument("config: unknown key: " + key);
}

}  // namespace

void TrainConfig::validate() const {
    auto nonneg = [](double v, const char* what) {
        if (!(v >= 0.0))
            throw std::invalid_argument(std::string("config: ") + what +
                                        " must be >= 0");
    };
    nonneg(lambda_cls_r, "lambda_cls_r");
    nonneg(lambda_cls_f, "lambda_cls_f");
    nonneg(lambda_reg, "lambda_reg");
    nonneg(lambda_cyc, "lambda_cyc");
    nonneg(weight_decay, "weight_decay");
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
    if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be > 0");
    if (!(grad_clip_norm > 0.0))
        throw std::invalid_argument("config: grad_clip_norm must be > 0");
    if (patches_per_layer < 2)
        throw std::invalid_argument("config: patches_per_layer must be >= 2");
    if (batch_size < 1)
        throw std::invalid_argument("config: batch_size must be >= 1");
    if (steps < 0 || epochs < 0)
        throw std::invalid_argument("config: negative step budget");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("config: betas must be in [0, 1)");
    if (nce_layers.empty())
        throw std::invalid_argument("config: nce_layers must not be empty");
    for (const auto& l : nce_layers)
        if (l != "input" && l != "conv1" && l != "conv2" && l != "res1" &&
            l != "res2" && l != "res3")
            throw std::invalid_argument("config: unknown nce layer: " + l);
}

TrainConfig parse_config(const std::string& text) {
    TrainConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " +
                                        std::to_string(lineno) +
                                        ": expected key = value");
        set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void apply_override(TrainConfig& cfg, const std::string& kv) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    set_key(cfg, trim(key), trim(val));
    cfg.validate();
}

namespace {
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string serialize_config(const TrainConfig& c) {
    std::ostringstream o;
    o << "preset = " << preset_name(c.preset) << "\n";
    o << "lambda_cls_r = " << fmt_double(c.lambda_cls_r) << "\n";
    o << "lambda_cls_f = " << fmt_double(c.lambda_cls_f) << "\n";
    o << "lambda_reg = " << fmt_double(c.lambda_reg) << "\n";
    o << "lambda_cyc = " << fmt_double(c.lambda_cyc) << "\n";
    o << "tau = " << fmt_double(c.tau) << "\n";
    o << "nce_layers = ";
    for (size_t i = 0; i < c.nce_layers.size(); ++i)
        o << (i ? "," : "") << c.nce_layers[i];
    o << "\n";
    o << "nce_reduction = "
      << (c.nce_reduction == NceReduction::kMean ? "mean" : "sum") << "\n";
    o << "patches_per_layer = " << c.patches_per_layer << "\n";
    o << "lr = " << fmt_double(c.lr) << "\n";
    o << "beta1 = " << fmt_double(c.beta1) << "\n";
    o << "beta2 = " << fmt_double(c.beta2) << "\n";
    o << "weight_decay = " << fmt_double(c.weight_decay) << "\n";
    o << "grad_clip_norm = " << fmt_double(c.grad_clip_norm) << "\n";
    o << "steps = " << c.steps << "\n";
    o << "epochs = " << c.epochs << "\n";
    o << "batch_size = " << c.batch_size << "\n";
    o << "seed = " << c.seed << "\n";
    o << "checkpoint_every = " << c.checkpoint_every << "\n";
    o << "preview_every = " << c.preview_every << "\n";
    return o.str();
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.preset == b.preset && a.lambda_cls_r == b.lambda_cls_r &&
           a.lambda_cls_f == b.lambda_cls_f && a.lambda_reg == b.lambda_reg &&
           a.lambda_cyc == b.lambda_cyc && a.tau == b.tau &&
           a.nce_layers == b.nce_layers &&
           a.nce_reduction == b.nce_reduction &&
           a.patches_per_layer == b.patches_per_layer && a.lr == b.lr &&
           a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
           a.weight_decay == b.weight_decay &&
           a.grad_clip_norm == b.grad_clip_norm && a.steps == b.steps &&
           a.epochs == b.epochs && a.batch_size == b.batch_size &&
           a.seed == b.seed && a.checkpoint_every == b.checkpoint_every &&
           a.preview_every == b.preview_every;
}

}  // namespace uslab
