#pragma once

#include "albank/http.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace albank::cli {

enum ExitCode : int {
    kOk = 0,
    kServerFailure = 1,
    kUsage = 2,
    kConnectivity = 3,
};

using TransportFactory = std::function<std::unique_ptr<Transport>(const std::string& endpoint)>;

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    /// Defaults to HttpTransport.
    TransportFactory transport;
};

/// Full command line, argv[0] included. Returns the process exit code.
int run(const std::vector<std::string>& args, Io io);

} // namespace albank::cli
