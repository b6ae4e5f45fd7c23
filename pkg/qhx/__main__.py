from qhx.cli import main

main()
