#include <csignal>
#include <iostream>

#include "negotiate/cli.hpp"

namespace {

void on_interrupt(int) {
    negotiate::cli::stop_flag().store(true);
    // a second Ctrl-C terminates immediately
    std::signal(SIGINT, SIG_DFL);
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_interrupt);
    return negotiate::cli::main(argc, argv, std::cout, std::cerr);
}
