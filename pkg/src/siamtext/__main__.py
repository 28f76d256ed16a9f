from siamtext.cli import main

main()
