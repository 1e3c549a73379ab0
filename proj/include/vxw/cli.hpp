// cli.hpp -- command-line front end for the detection pipeline.
#ifndef VXW_CLI_HPP
#define VXW_CLI_HPP

#include <string>
#include <vector>

namespace vxw::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand (generate | pretrain | finetune | build-bank | score
// | clusters | evaluate) with the given arguments, without the program
// name. Returns the process exit code: 0 on success, nonzero on any error.
int run(const std::vector<std::string>& args);

}  // namespace vxw::cli

#endif
