from lfdeblur.main import main

main()
