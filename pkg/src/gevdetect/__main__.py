from gevdetect.cli import main

main()
