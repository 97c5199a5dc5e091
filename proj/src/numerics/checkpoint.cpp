#include "factorcast/numerics/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace factorcast::num {

Parameter& ParameterSet::add(std::string name, Tensor value) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    if (name.find_first_of(" \t\n") != std::string::npos) {
        throw std::invalid_argument("parameter name contains whitespace: '" + name + "'");
    }
    params_.emplace_back(std::move(name), std::move(value));
    return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p;
    throw std::out_of_range("no parameter named '" + name + "'");
}

const Parameter& ParameterSet::at(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p;
    throw std::out_of_range("no parameter named '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return true;
    return false;
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::vector<Parameter*> ParameterSet::pointers() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void ParameterSet::assign(const ParameterSet& other) {
    if (other.size() != size()) throw std::invalid_argument("parameter sets differ in size");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name != other.params_[i].name ||
            !(params_[i].value.shape == other.params_[i].value.shape)) {
            throw std::invalid_argument("parameter sets differ at '" + params_[i].name + "'");
        }
        params_[i].value = other.params_[i].value;
    }
}

void write_checkpoint(std::ostream& os, const ParameterSet& params) {
    os << "factorcast-checkpoint 1\n" << params.size() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = params[i];
        os << p.name << ' ' << p.value.shape.rank();
        for (std::size_t a = 0; a < p.value.shape.rank(); ++a) os << ' ' << p.value.shape[a];
        os << '\n';
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%a", p.value.data[k]);
            os << (k ? " " : "") << buf;
        }
        os << '\n';
    }
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path.string());
    write_checkpoint(os, params);
}

void read_checkpoint(std::istream& is, ParameterSet& params) {
    std::string magic;
    int version = 0;
    std::size_t count = 0;
    if (!(is >> magic >> version) || magic != "factorcast-checkpoint" || version != 1) {
        throw std::runtime_error("not a factorcast checkpoint (bad header)");
    }
    if (!(is >> count) || count != params.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(count) +
                                 " arrays, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::string name;
        std::size_t rank = 0;
        if (!(is >> name >> rank) || rank > Shape::kMaxRank) {
            throw std::runtime_error("malformed checkpoint entry " + std::to_string(i));
        }
        Parameter& p = params.at(name);
        std::array<std::size_t, 3> dims{};
        for (std::size_t a = 0; a < rank; ++a) is >> dims[a];
        bool same = rank == p.value.shape.rank();
        for (std::size_t a = 0; same && a < rank; ++a) same = dims[a] == p.value.shape[a];
        if (!same) throw std::runtime_error("shape mismatch for '" + name + "' in checkpoint");
        for (double& v : p.value.data) {
            std::string tok;
            if (!(is >> tok)) throw std::runtime_error("truncated values for '" + name + "'");
            char* end = nullptr;
            v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') {
                throw std::runtime_error("bad number '" + tok + "' for '" + name + "'");
            }
        }
    }
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read checkpoint " + path.string());
    read_checkpoint(is, params);
}

}  // namespace factorcast::num
