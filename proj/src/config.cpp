#include "csod/config.hpp"

#include <fstream>
#include <sstream>

namespace csod {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError(cat("key ", key, ": expected a boolean, got '", v, "'"));
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        int r = std::stoi(v, &pos);
        check<ConfigError>(pos == v.size(), "key ", key, ": trailing junk in '", v, "'");
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(cat("key ", key, ": expected an integer, got '", v, "'"));
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        check<ConfigError>(pos == v.size(), "key ", key, ": trailing junk in '", v, "'");
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(cat("key ", key, ": expected a number, got '", v, "'"));
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long r = std::stoull(v, &pos);
        check<ConfigError>(pos == v.size(), "key ", key, ": trailing junk in '", v, "'");
        return r;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(cat("key ", key, ": expected an unsigned integer, got '", v, "'"));
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
    check<ConfigError>(!out.empty(), "key ", key, ": empty list");
    return out;
}

}  // namespace

void RunConfig::validate() const {
    net.validate();
    optimizer.resolved();  // validates
    check<ConfigError>(epochs >= 1, "epochs must be >= 1, got ", epochs);
    check<ConfigError>(accumulation >= 1, "accumulation must be >= 1, got ", accumulation);
    check<ConfigError>(base_lr > 0.0, "base_lr must be > 0, got ", base_lr);
    check<ConfigError>(!data_root.empty(), "data root must not be empty");
    check<ConfigError>(!out_dir.empty(), "output dir must not be empty");
}

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        check<ConfigError>(eq != std::string::npos, "config line ", lineno,
                           ": expected key=value, got '", line, "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        check<ConfigError>(!key.empty(), "config line ", lineno, ": empty key");

        if (key == "net.stages") {
            cfg.net.stages = to_int(key, val);
        } else if (key == "net.stage_channels") {
            cfg.net.stage_channels = to_int_list(key, val);
        } else if (key == "net.decoder") {
            if (val == "fire") {
                cfg.net.decoder = NetConfig::Decoder::fire;
            } else if (val == "plain") {
                cfg.net.decoder = NetConfig::Decoder::plain;
            } else {
                throw ConfigError(cat("key ", key, ": expected fire or plain, got '", val, "'"));
            }
        } else if (key == "net.se_enabled") {
            cfg.net.se_enabled = to_bool(key, val);
        } else if (key == "net.edge_branch") {
            cfg.net.edge_branch = to_bool(key, val);
        } else if (key == "net.input_size") {
            cfg.net.input_size = to_int(key, val);
        } else if (key == "net.fire_squeeze_div") {
            cfg.net.fire_squeeze_div = to_int(key, val);
        } else if (key == "net.se_reduction") {
            cfg.net.se_reduction = to_int(key, val);
        } else if (key == "net.se_residual") {
            cfg.net.se_residual = to_bool(key, val);
        } else if (key == "opt.algorithm") {
            cfg.optimizer.algorithm = algo_from_name(val);
        } else if (key == "opt.beta1") {
            cfg.optimizer.beta1 = to_double(key, val);
        } else if (key == "opt.beta2") {
            cfg.optimizer.beta2 = to_double(key, val);
        } else if (key == "opt.eps") {
            cfg.optimizer.eps = to_double(key, val);
        } else if (key == "opt.weight_decay") {
            cfg.optimizer.weight_decay = to_double(key, val);
        } else if (key == "opt.momentum") {
            cfg.optimizer.momentum = to_double(key, val);
        } else if (key == "opt.eps_inside_sqrt") {
            cfg.optimizer.eps_inside_sqrt = to_bool(key, val);
        } else if (key == "epochs") {
            cfg.epochs = to_int(key, val);
        } else if (key == "accumulation") {
            cfg.accumulation = to_int(key, val);
        } else if (key == "base_lr") {
            cfg.base_lr = to_double(key, val);
        } else if (key == "seed") {
            cfg.seed = to_u64(key, val);
        } else if (key == "data") {
            cfg.data_root = val;
        } else if (key == "out") {
            cfg.out_dir = val;
        } else {
            throw ConfigError(cat("unknown config key '", key, "' at line ", lineno));
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream f(path);
    check<ConfigError>(f.good(), "cannot open config file: ", path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_text(text);
}

}  // namespace csod
