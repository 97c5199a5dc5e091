#pragma once

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "factorcast/numerics/tape.hpp"

namespace factorcast::num {

/// Ordered collection of named parameters with stable addresses.
class ParameterSet {
public:
    Parameter& add(std::string name, Tensor value);

    [[nodiscard]] Parameter& at(const std::string& name);
    [[nodiscard]] const Parameter& at(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const;

    [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
    [[nodiscard]] std::size_t scalar_count() const noexcept;
    [[nodiscard]] std::vector<Parameter*> pointers();

    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }

    void zero_grad();
    /// Copies values from another set with identical names and shapes.
    void assign(const ParameterSet& other);

private:
    std::deque<Parameter> params_;
};

// Text container:
//   factorcast-checkpoint 1
//   <count>
//   <name> <rank> <dims...>
//   <values in hexadecimal floating point, space separated>
// Hex floats make the round trip value-exact.
void write_checkpoint(std::ostream& os, const ParameterSet& params);
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);

/// Reads into an existing set; every stored name and shape must match.
void read_checkpoint(std::istream& is, ParameterSet& params);
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);

}  // namespace factorcast::num
