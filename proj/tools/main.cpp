#include "app.hpp"

int main(int argc, char** argv) { return cpflow::app::dispatch(argc, argv); }
