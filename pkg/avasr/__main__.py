from avasr.cli import main

main()
