from quermass_lab.cli import main

main()
