#pragma once

#include <string>
#include <vector>

namespace featforge::featscript {

enum class Kind { scalar, boolean, series };

enum class ArgConstraint { scalar, boolean, series, scalar_or_boolean };

struct BuiltinSpec {
    const char* name;
    std::vector<ArgConstraint> args;  // for tools, excludes the variable slot
    Kind result;
    bool is_tool;
};

const std::vector<BuiltinSpec>& builtins();
const BuiltinSpec* find_builtin(const std::string& name);
bool is_tool_name(const std::string& name);

const char* kind_name(Kind k);

}  // namespace featforge::featscript
