__title__ = 'microgrid-vsc-election'
__description__ = 'Simulate fair voltage-regulator election in LV microgrids, centralized or over a private blockchain'
__url__ = ''
__version__ = '0.1.0'
__author__ = 'Farhad Abdolhosseini'
__author_email__ = 'farhadab15@gmail.com'
__license__ = 'MIT'
# __copyright__ = 'Copyright 2019 Farhad Abdolhosseini'
