# endpoints package
