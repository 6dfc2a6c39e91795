#include <string>
#include <vector>

#include "satopf/cli_app.hpp"

int main(int argc, char** argv) {
    return satopf::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
