#include "wdm/harness.hpp"

int main(int argc, char** argv) {
    return wdm::run_cli(argc, argv);
}
