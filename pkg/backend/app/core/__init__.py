# Settings, logging and exceptions
